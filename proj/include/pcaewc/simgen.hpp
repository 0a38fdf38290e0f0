#pragma once

#include "pcaewc/rng.hpp"
#include "pcaewc/types.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace pcaewc {

/// One latent source: uniform(lo, hi) or gaussian(mean, var).
struct SourceSpec {
    enum class Kind { Uniform, Gaussian };
    Kind kind = Kind::Gaussian;
    double a = 0.0;  // lo or mean
    double b = 1.0;  // hi or var

    static SourceSpec uniform(double lo, double hi) {
        if (!(lo < hi)) throw SpecOutOfRange("uniform source requires lo < hi");
        return {Kind::Uniform, lo, hi};
    }
    static SourceSpec gaussian(double mean, double var) {
        if (!(var > 0.0)) throw SpecOutOfRange("gaussian source requires var > 0");
        return {Kind::Gaussian, mean, var};
    }

    double mean() const { return kind == Kind::Uniform ? 0.5 * (a + b) : a; }
    double variance() const {
        return kind == Kind::Uniform ? (b - a) * (b - a) / 12.0 : b;
    }
};

struct BlockSpec {
    std::array<SourceSpec, 3> sources;
};

/// step: constant offset from the onset on; slope: ramp magnitude*(i-onset+1).
struct FaultSpec {
    enum class Kind { Step, Slope };
    Kind kind = Kind::Step;
    Index variable_index = 1;  // 1-based, matches the x1..x8 naming
    Index onset_sample = 1;    // 1-based sample at which the fault starts
    double magnitude = 0.0;
};

// Default measurement-noise variance: e_i ~ N(0, sigma^2) with sigma = 1e-3.
inline constexpr double kDefaultNoiseVariance = 1e-6;
inline constexpr int kNumVars = 8;
inline constexpr int kNumSources = 3;

/// Fixed 8x3 mixing matrix of the synthetic process.
inline const Matrix& mixing_matrix() {
    static const Matrix A = [] {
        Matrix a(kNumVars, kNumSources);
        a << 0.95, 0.82, 0.94,
             0.23, 0.45, 0.92,
            -0.61, 0.62, 0.41,
             0.49, 0.79, 0.89,
             0.89, -0.92, 0.06,
             0.76, 0.74, 0.35,
             0.46, 0.58, 0.81,
            -0.02, 0.41, 0.01;
        return a;
    }();
    return A;
}

/// Source distributions for Data 1..4. Data 3 shares Data 1's record.
inline const BlockSpec& data_spec(int data_id) {
    static const BlockSpec d1{{SourceSpec::uniform(-10.0, -9.7), SourceSpec::gaussian(-5.0, 1.0),
                               SourceSpec::uniform(2.0, 3.0)}};
    static const BlockSpec d2{{SourceSpec::uniform(-6.0, -5.7), SourceSpec::gaussian(-1.0, 1.0),
                               SourceSpec::uniform(3.0, 4.0)}};
    static const BlockSpec d4{{SourceSpec::uniform(-9.0, -8.7), SourceSpec::gaussian(-5.0, 1.0),
                               SourceSpec::uniform(3.0, 4.0)}};
    switch (data_id) {
        case 1:
        case 3:
            return d1;
        case 2:
            return d2;
        case 4:
            return d4;
        default:
            throw UnknownDataId("data id must be 1..4, got " + std::to_string(data_id));
    }
}

/// x = A s + e, drawn row by row (s1, s2, s3, then e1..e8) from one stream.
inline DataMatrix generate_block(int data_id, Index n, std::uint64_t seed,
                                 double noise_variance = kDefaultNoiseVariance) {
    if (n < 1) throw SpecOutOfRange("generate_block: n must be >= 1");
    if (noise_variance < 0.0) throw SpecOutOfRange("generate_block: negative noise variance");
    const BlockSpec& spec = data_spec(data_id);
    const Matrix& A = mixing_matrix();
    const double noise_sd = std::sqrt(noise_variance);
    Rng rng(seed);
    Matrix X(n, kNumVars);
    Vector s(kNumSources);
    for (Index i = 0; i < n; ++i) {
        for (int j = 0; j < kNumSources; ++j) {
            const SourceSpec& src = spec.sources[static_cast<std::size_t>(j)];
            s[j] = src.kind == SourceSpec::Kind::Uniform ? rng.uniform(src.a, src.b)
                                                         : rng.normal(src.a, std::sqrt(src.b));
        }
        X.row(i) = (A * s).transpose();
        if (noise_sd > 0.0)
            for (int j = 0; j < kNumVars; ++j) X(i, j) += rng.normal(0.0, noise_sd);
    }
    return DataMatrix(std::move(X));
}

/// Apply a fault and return the modified block plus per-sample truth labels.
inline std::pair<DataMatrix, std::vector<std::uint8_t>> inject_fault(const DataMatrix& X,
                                                                     const FaultSpec& f) {
    const Index n = X.n_samples();
    if (f.variable_index < 1 || f.variable_index > X.n_vars())
        throw SpecOutOfRange("inject_fault: variable index out of range");
    if (f.onset_sample < 1 || f.onset_sample > n)
        throw SpecOutOfRange("inject_fault: onset outside block");
    Matrix out = X.values;
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(n), 0);
    const Index v = f.variable_index - 1;
    for (Index i = f.onset_sample - 1; i < n; ++i) {
        const double k = static_cast<double>(i - (f.onset_sample - 1) + 1);
        out(i, v) += f.kind == FaultSpec::Kind::Step ? f.magnitude : f.magnitude * k;
        labels[static_cast<std::size_t>(i)] = 1;
    }
    return {DataMatrix(std::move(out)), std::move(labels)};
}

/// The three fault scenarios of the numerical study.
inline FaultSpec fault_spec(int fault_id, Index onset_sample = 501) {
    switch (fault_id) {
        case 1:
            return {FaultSpec::Kind::Step, 3, onset_sample, 0.1};
        case 2:
            return {FaultSpec::Kind::Step, 6, onset_sample, 0.1};
        case 3:
            return {FaultSpec::Kind::Slope, 1, onset_sample, 0.002};
        default:
            throw SpecOutOfRange("fault id must be 1..3, got " + std::to_string(fault_id));
    }
}

// Stream tags for per-block seed derivation via mix64(seed, tag).
inline constexpr std::uint64_t kStreamTrain1 = 0x01;
inline constexpr std::uint64_t kStreamTrain2 = 0x02;
inline constexpr std::uint64_t kStreamTestBase = 0x10;  // + data id

struct ScenarioData {
    DataMatrix train1;
    DataMatrix train2;
    DataMatrix test;                     // fault already injected
    std::vector<std::uint8_t> labels;
    int test_data_id = 0;
    Index onset_sample = 0;
};

/// Test-block data id per situation; situation 5 tests the similar fourth
/// mode.
inline int scenario_test_data_id(int scenario) {
    switch (scenario) {
        case 1: return 1;
        case 2: return 2;
        case 3: return 3;
        case 4: return 3;
        case 5: return 4;
        default: throw UnknownScenario("scenario must be 1..5, got " + std::to_string(scenario));
    }
}

/// Bundle of training and testing blocks for one situation/fault pair.
/// Training blocks use streams kStreamTrain1/kStreamTrain2; the testing block
/// uses kStreamTestBase + data id, so blocks are independent and reproducible.
inline ScenarioData scenario_dataset(int scenario, const FaultSpec& fault, std::uint64_t seed,
                                     Index n_train = 1000, Index n_test = 1000,
                                     double noise_variance = kDefaultNoiseVariance) {
    const int test_id = scenario_test_data_id(scenario);
    ScenarioData out;
    out.train1 = generate_block(1, n_train, mix64(seed, kStreamTrain1), noise_variance);
    out.train2 = generate_block(2, n_train, mix64(seed, kStreamTrain2), noise_variance);
    DataMatrix clean = generate_block(test_id, n_test,
                                      mix64(seed, kStreamTestBase + static_cast<std::uint64_t>(test_id)),
                                      noise_variance);
    auto [faulty, labels] = inject_fault(clean, fault);
    out.test = std::move(faulty);
    out.labels = std::move(labels);
    out.test_data_id = test_id;
    out.onset_sample = fault.onset_sample;
    return out;
}

}  // namespace pcaewc
