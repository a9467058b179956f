#ifndef RESPRED_RESILIENCE_HPP
#define RESPRED_RESILIENCE_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "respred/dataset.hpp"

namespace respred::curve {

struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidSpec : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ReconMode { observed, onestep, recursive };

// Performance curve over time steps 0..n; reconstructed curves share the
// observed starting point.
struct ResilienceCurve {
    std::vector<double> values;
    ReconMode mode = ReconMode::observed;

    // Values aligned with target space (time steps 1..n), the range the
    // goodness-of-fit measures operate on.
    std::span<const double> target_view() const {
        return {values.data() + 1, values.size() - 1};
    }
};

// Rebuild performance from predicted changes. onestep adds each predicted
// change to the observed previous value; recursive chains predictions from
// the observed starting point.
ResilienceCurve reconstruct(std::span<const double> observed,
                            std::span<const double> delta_hat, ReconMode mode);

// Canonical curve for oracle tests: flat nominal level, decline to a trough
// after the shock at t_h, recovery to a new level by t_r, flat afterwards.
// The first two generated covariates carry the decline and recovery
// magnitudes scaled by covariate_coupling, so the change in performance is an
// exact linear function of them when noise_std is zero; any further coupling
// entries produce distractor columns.
struct SyntheticCurveSpec {
    double nominal_level = 1.0;
    std::size_t t_h = 5;
    std::size_t t_d = 10;
    std::size_t t_r = 20;
    double trough_level = 0.6;
    double recovered_level = 1.0;
    double noise_std = 0.0;
    std::vector<double> covariate_coupling = {1.0, 1.0};
    std::uint64_t seed = 0;

    void validate() const;
};

data::RawTable generate_synthetic_raw(const SyntheticCurveSpec& spec,
                                      std::size_t length);
data::NormalizedDataset generate_synthetic(const SyntheticCurveSpec& spec,
                                           std::size_t length);

} // namespace respred::curve

#endif // RESPRED_RESILIENCE_HPP
