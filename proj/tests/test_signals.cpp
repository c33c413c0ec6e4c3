#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nnmrom/signals.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace nnmrom;

namespace {

// Periodogram oracle: direct DFT, |X(f)|^2 / N at the requested bins.
std::vector<double> periodogram(const Eigen::RowVectorXd& x, double dt,
                                std::vector<double>& freqs_out) {
    const auto n = static_cast<std::size_t>(x.size());
    const std::size_t n_bins = n / 2;
    std::vector<double> psd(n_bins);
    freqs_out.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        std::complex<double> acc(0.0, 0.0);
        const double w = -2.0 * M_PI * static_cast<double>(b) / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k)
            acc += x[static_cast<Eigen::Index>(k)]
                   * std::complex<double>(std::cos(w * static_cast<double>(k)),
                                          std::sin(w * static_cast<double>(k)));
        psd[b] = std::norm(acc) / static_cast<double>(n);
        freqs_out[b] = static_cast<double>(b) / (static_cast<double>(n) * dt);
    }
    return psd;
}

double channel_variance(const Eigen::RowVectorXd& x) {
    const double mean = x.mean();
    return (x.array() - mean).square().sum() / static_cast<double>(x.size());
}

} // namespace

TEST_CASE("filtered noise hits the target variance exactly") {
    const auto sig = make_filtered_noise(2, 6000, 0.01, 7.5, 24.0, 1);
    for (int ch = 0; ch < 2; ++ch)
        CHECK(channel_variance(sig.samples.row(ch)) == doctest::Approx(24.0).epsilon(1e-9));
}

TEST_CASE("filtered noise stopband is at least 20 dB below the passband mean") {
    const auto sig = make_filtered_noise(1, 4096, 0.01, 7.5, 24.0, 5);
    std::vector<double> freqs;
    const auto psd = periodogram(sig.samples.row(0), 0.01, freqs);

    double pass_sum = 0.0, stop_sum = 0.0;
    int pass_n = 0, stop_n = 0;
    for (std::size_t b = 1; b < psd.size(); ++b) {
        if (freqs[b] <= 7.5) {
            pass_sum += psd[b];
            ++pass_n;
        } else if (freqs[b] >= 1.5 * 7.5) {
            stop_sum += psd[b];
            ++stop_n;
        }
    }
    const double pass_mean = pass_sum / pass_n;
    const double stop_mean = stop_sum / stop_n;
    CHECK(10.0 * std::log10(pass_mean / stop_mean) > 20.0);
}

TEST_CASE("filtered noise is deterministic and channels are uncorrelated") {
    const auto a = make_filtered_noise(2, 6000, 0.01, 7.5, 24.0, 42);
    const auto b = make_filtered_noise(2, 6000, 0.01, 7.5, 24.0, 42);
    CHECK(a.samples == b.samples); // bit-identical

    const auto c = make_filtered_noise(2, 6000, 0.01, 7.5, 24.0, 43);
    CHECK(a.samples != c.samples);

    // correlation between the two (independently seeded) channels
    const Eigen::RowVectorXd x = a.samples.row(0);
    const Eigen::RowVectorXd y = a.samples.row(1);
    const double r = (x.array() - x.mean()).matrix().dot((y.array() - y.mean()).matrix())
                     / (std::sqrt((x.array() - x.mean()).square().sum())
                        * std::sqrt((y.array() - y.mean()).square().sum()));
    CHECK(std::abs(r) < 0.1);
}

TEST_CASE("cutoff at or above Nyquist is rejected") {
    CHECK_THROWS_AS(make_filtered_noise(1, 100, 0.01, 50.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_filtered_noise(1, 100, 0.01, 60.0, 1.0, 0), std::invalid_argument);
    CHECK_NOTHROW(make_filtered_noise(1, 100, 0.01, 49.0, 1.0, 0));
}

TEST_CASE("sinusoid channels") {
    SUBCASE("zero amplitude gives a zero channel") {
        const auto sig = make_sinusoid(2, 500, 0.01, 1.5, {0.0, 60e3});
        CHECK(sig.samples.row(0).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("peak reaches the amplitude within one sample of quantization") {
        const auto sig = make_sinusoid(1, 1000, 0.01, 1.5, {30e3});
        const double peak = sig.samples.row(0).maxCoeff();
        // worst-case quantization: sin can miss the crest by half a sample
        const double worst = 30e3 * std::cos(2.0 * M_PI * 1.5 * 0.01 / 2.0);
        CHECK(peak <= 30e3 + 1e-9);
        CHECK(peak >= worst - 1e-9);
    }

    SUBCASE("asymmetric two-channel load protocol") {
        const auto sig = make_sinusoid(2, 500, 0.01, 1.5, {30e3, 60e3});
        CHECK(sig.samples(1, 100) == doctest::Approx(2.0 * sig.samples(0, 100)).epsilon(1e-12));
        // scaled copies used for the multi-amplitude protocol
        for (double scale : {1.0, 0.5, 0.25, 0.75}) {
            const auto scaled = make_sinusoid(2, 500, 0.01, 1.5, {scale * 30e3, scale * 60e3});
            CHECK(scaled.samples(0, 57) == doctest::Approx(scale * sig.samples(0, 57)).epsilon(1e-12));
        }
    }
}

TEST_CASE("butterworth filter attenuates a high-frequency tone") {
    const double dt = 0.01;
    std::vector<double> tone(4000);
    for (std::size_t i = 0; i < tone.size(); ++i)
        tone[i] = std::sin(2.0 * M_PI * 20.0 * static_cast<double>(i) * dt);
    const auto filtered = butterworth4_lowpass(tone, 5.0, dt);
    double peak = 0.0;
    for (std::size_t i = 1000; i < filtered.size(); ++i)
        peak = std::max(peak, std::abs(filtered[i]));
    // 4th order: ~24 dB/octave; 20 Hz is two octaves above 5 Hz
    CHECK(peak < 0.01);
}
