#include "cbp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace cbp {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

// log(k!) - [(k + 1/2) log(k + 1) - (k + 1) + log(2 pi)/2], the Stirling remainder.
double stirling_tail(std::int64_t k) {
    static constexpr double table[10] = {
        0.08106146679532726, 0.04134069595540929, 0.02767792568499834,
        0.02079067210376509, 0.01664469118982119, 0.01387612882307075,
        0.01189670994589177, 0.01041126526197209, 0.009255462182712733,
        0.008330563433362871,
    };
    if (k < 10) return table[k];
    const double kp1 = static_cast<double>(k + 1);
    const double kp1sq = kp1 * kp1;
    return (1.0 / 12 - (1.0 / 360 - 1.0 / 1260 / kp1sq) / kp1sq) / kp1;
}

constexpr double kInversionMeanLimit = 14.0;

}  // namespace

std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (auto part : parts) h = mix64(h ^ mix64(part + 0x632BE59BD9B4E019ULL));
    return h;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream) : stream_(stream) {
    std::uint64_t x = mix64(master_seed) ^ mix64(stream ^ 0xA0761D6478BD642FULL);
    for (auto& word : s_) {
        x += 0x9E3779B97F4A7C15ULL;
        word = mix64(x);
    }
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t RngStream::next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

__extension__ using u128 = unsigned __int128;

std::uint64_t RngStream::uniform_below(std::uint64_t bound) noexcept {
    // Lemire's nearly divisionless method.
    u128 m = static_cast<u128>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<u128>(next_u64()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::exponential(double rate) noexcept {
    return -std::log1p(-uniform()) / rate;
}

std::int64_t RngStream::binomial(std::int64_t trials, double prob) {
    return BinomialSampler(trials, prob)(*this);
}

RngStream RngStream::split(std::uint64_t tag) noexcept {
    return RngStream(next_u64(), stream_id({stream_, tag}));
}

BinomialSampler::BinomialSampler(std::int64_t trials, double prob) : n_(trials), p_in_(prob) {
    if (trials < 0 || !(prob >= 0.0 && prob <= 1.0))
        throw std::invalid_argument("binomial: need trials >= 0 and prob in [0, 1]");
    flipped_ = prob > 0.5;
    p_ = flipped_ ? 1.0 - prob : prob;
    const double nd = static_cast<double>(n_);
    use_inversion_ = nd * p_ < kInversionMeanLimit;
    if (n_ == 0 || p_ == 0.0) return;
    if (use_inversion_) {
        q0_ = std::exp(nd * std::log1p(-p_));
        odds_ = p_ / (1.0 - p_);
        return;
    }
    const double q = 1.0 - p_;
    m_ = std::floor((nd + 1) * p_);
    r_ = p_ / q;
    nr_ = (nd + 1) * r_;
    npq_ = nd * p_ * q;
    const double sq = std::sqrt(npq_);
    b_ = 1.15 + 2.53 * sq;
    a_ = -0.0873 + 0.0248 * b_ + 0.01 * p_;
    c_ = nd * p_ + 0.5;
    alpha_ = (2.83 + 5.1 / b_) * sq;
    vr_ = 0.92 - 4.2 / b_;
    urvr_ = 0.86 * vr_;
}

std::int64_t BinomialSampler::operator()(RngStream& rng) const {
    if (n_ == 0 || p_ == 0.0) return flipped_ ? n_ : 0;
    const std::int64_t k = use_inversion_ ? draw_inversion(rng) : draw_btrd(rng);
    return flipped_ ? n_ - k : k;
}

std::int64_t BinomialSampler::draw_inversion(RngStream& rng) const {
    for (;;) {
        double u = rng.uniform();
        double f = q0_;
        std::int64_t k = 0;
        while (u >= f) {
            u -= f;
            ++k;
            if (k > n_) break;
            f *= odds_ * static_cast<double>(n_ - k + 1) / static_cast<double>(k);
        }
        // Rounding can exhaust the pmf before u does; redraw in that case.
        if (k <= n_) return k;
    }
}

std::int64_t BinomialSampler::draw_btrd(RngStream& rng) const {
    const double nd = static_cast<double>(n_);
    for (;;) {
        double v = rng.uniform();
        double u;
        if (v <= urvr_) {
            u = v / vr_ - 0.43;
            return static_cast<std::int64_t>(std::floor((2 * a_ / (0.5 - std::abs(u)) + b_) * u + c_));
        }
        if (v >= vr_) {
            u = rng.uniform() - 0.5;
        } else {
            u = v / vr_ - 0.93;
            u = std::copysign(0.5, u) - u;
            v = rng.uniform() * vr_;
        }
        const double us = 0.5 - std::abs(u);
        const double kd = std::floor((2 * a_ / us + b_) * u + c_);
        if (kd < 0 || kd > nd) continue;
        const auto k = static_cast<std::int64_t>(kd);
        v = v * alpha_ / (a_ / (us * us) + b_);
        const auto m = static_cast<std::int64_t>(m_);
        const std::int64_t km = k > m ? k - m : m - k;
        if (km <= 15) {
            double f = 1.0;
            if (m < k) {
                for (std::int64_t i = m + 1; i <= k; ++i) f *= nr_ / static_cast<double>(i) - r_;
            } else if (m > k) {
                for (std::int64_t i = k + 1; i <= m; ++i) v *= nr_ / static_cast<double>(i) - r_;
            }
            if (v <= f) return k;
            continue;
        }
        v = std::log(v);
        const double kmd = static_cast<double>(km);
        const double rho = (kmd / npq_) * (((kmd / 3 + 0.625) * kmd + 1.0 / 6) / npq_ + 0.5);
        const double t = -kmd * kmd / (2 * npq_);
        if (v < t - rho) return k;
        if (v > t + rho) continue;
        const double nm = nd - m_ + 1;
        const double h = (m_ + 0.5) * std::log((m_ + 1) / (r_ * nm)) + stirling_tail(m) +
                         stirling_tail(n_ - m);
        const double nk = nd - kd + 1;
        if (v <= h + (nd + 1) * std::log(nm / nk) + (kd + 0.5) * std::log(nk * r_ / (kd + 1)) -
                     stirling_tail(k) - stirling_tail(n_ - k))
            return k;
    }
}

}  // namespace cbp
