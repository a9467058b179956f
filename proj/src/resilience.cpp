#include "respred/resilience.hpp"

#include <algorithm>
#include <cmath>

#include "respred/rng.hpp"

namespace respred::curve {

ResilienceCurve reconstruct(std::span<const double> observed,
                            std::span<const double> delta_hat, ReconMode mode) {
    if (observed.size() < 2)
        throw LengthMismatch("observed series needs at least 2 points");
    if (delta_hat.size() != observed.size() - 1)
        throw LengthMismatch("delta sequence must have one entry per step: got " +
                             std::to_string(delta_hat.size()) + " for " +
                             std::to_string(observed.size()) + " points");
    if (mode == ReconMode::observed)
        throw std::invalid_argument("reconstruct needs onestep or recursive mode");

    ResilienceCurve curve;
    curve.mode = mode;
    curve.values.resize(observed.size());
    curve.values[0] = observed[0];
    for (std::size_t i = 1; i < observed.size(); ++i) {
        double prev = (mode == ReconMode::onestep) ? observed[i - 1]
                                                   : curve.values[i - 1];
        curve.values[i] = prev + delta_hat[i - 1];
    }
    return curve;
}

void SyntheticCurveSpec::validate() const {
    if (!(t_h < t_d && t_d < t_r))
        throw InvalidSpec("need t_h < t_d < t_r");
    if (nominal_level <= 0.0 || nominal_level > 1.0 || recovered_level <= 0.0 ||
        recovered_level > 1.0)
        throw InvalidSpec("levels must lie in (0,1]");
    if (trough_level <= 0.0 ||
        trough_level >= std::min(nominal_level, recovered_level))
        throw InvalidSpec("trough must lie below nominal and recovered levels");
    if (noise_std < 0.0) throw InvalidSpec("noise_std must be >= 0");
    if (covariate_coupling.size() < 2)
        throw InvalidSpec("need coupling for the shock and recovery covariates");
    if (covariate_coupling[0] <= 0.0 || covariate_coupling[1] <= 0.0)
        throw InvalidSpec("shock/recovery coupling must be positive");
}

namespace {

// Cosine ease between two levels: monotone on [0,1], flat tangents at both
// ends so the curve is smooth at phase boundaries.
double ease(double from, double to, double s) {
    return from + (to - from) * 0.5 * (1.0 - std::cos(3.14159265358979323846 * s));
}

} // namespace

data::RawTable generate_synthetic_raw(const SyntheticCurveSpec& spec,
                                      std::size_t length) {
    spec.validate();
    if (length <= spec.t_r)
        throw InvalidSpec("length must exceed t_r");

    data::RawTable table;
    table.performance.resize(length);
    for (std::size_t t = 0; t < length; ++t) {
        double p;
        if (t <= spec.t_h) {
            p = spec.nominal_level;
        } else if (t <= spec.t_d) {
            double s = static_cast<double>(t - spec.t_h) /
                       static_cast<double>(spec.t_d - spec.t_h);
            p = ease(spec.nominal_level, spec.trough_level, s);
        } else if (t <= spec.t_r) {
            double s = static_cast<double>(t - spec.t_d) /
                       static_cast<double>(spec.t_r - spec.t_d);
            p = ease(spec.trough_level, spec.recovered_level, s);
        } else {
            p = spec.recovered_level;
        }
        table.performance[t] = p;
    }

    table.time_labels.resize(length);
    for (std::size_t t = 0; t < length; ++t)
        table.time_labels[t] = "t" + std::to_string(t);

    const std::size_t m = spec.covariate_coupling.size();
    table.covariates.assign(m, std::vector<double>(length, 0.0));
    table.covariate_names.resize(m);
    for (std::size_t j = 0; j < m; ++j)
        table.covariate_names[j] = "X" + std::to_string(j + 1);

    Rng rng(spec.seed);
    for (std::size_t t = 0; t < length; ++t) {
        double dp = t == 0 ? 0.0 : table.performance[t] - table.performance[t - 1];
        // X1: shock magnitude while performance declines.
        // X2: recovery effort while it rises.
        table.covariates[0][t] = spec.covariate_coupling[0] * std::max(0.0, -dp);
        table.covariates[1][t] = spec.covariate_coupling[1] * std::max(0.0, dp);
        // Distractors: smooth seasonal wiggles unrelated to the target.
        for (std::size_t j = 2; j < m; ++j)
            table.covariates[j][t] =
                spec.covariate_coupling[j] *
                (0.5 + 0.5 * std::sin(0.7 * static_cast<double>(t) +
                                      static_cast<double>(j)));
        if (spec.noise_std > 0.0)
            for (std::size_t j = 0; j < m; ++j)
                table.covariates[j][t] = std::max(
                    0.0, table.covariates[j][t] + spec.noise_std * rng.gaussian());
    }
    return table;
}

data::NormalizedDataset generate_synthetic(const SyntheticCurveSpec& spec,
                                           std::size_t length) {
    return data::normalize(generate_synthetic_raw(spec, length));
}

} // namespace respred::curve
