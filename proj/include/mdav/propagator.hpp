#pragma once

#include "mdav/apoptosis.hpp"
#include "mdav/ensemble.hpp"
#include "mdav/linsys.hpp"
#include "mdav/model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mdav {

struct IntegratorConfig {
    double rtol = 1e-8;
    double atol = 1e-10;
    double initial_step = 1e-3;
    double max_step = 1.0;
    double min_step = 1e-10;
    double t_final = 50.0;
    int output_points = 500;
    long long max_steps = 50'000'000;

    void validate() const;
};

// Per accepted step diagnostics record.
struct StepRecord {
    double t = 0.0;       // time at end of step
    double h = 0.0;       // step size taken
    int matrix_size = 0;  // after folding
    double rcond = 0.0;
    double min_distance = 0.0;
};

struct AbortRecord {
    std::string reason;       // "step_underflow" | "singular_system" | "max_steps"
    double t = 0.0;
    double min_distance = 0.0;
    double rcond = 0.0;
};

struct RunOutput {
    std::vector<double> times;            // equidistant output grid (reached part)
    std::vector<EnsembleState> snapshots; // state at each output time
    std::vector<MergeEvent> events;
    std::vector<StepRecord> diagnostics;
    std::optional<AbortRecord> abort;
    long long steps_accepted = 0;
    long long steps_rejected = 0;
    long long rhs_evaluations = 0;
    double wall_seconds = 0.0;

    bool completed() const { return !abort.has_value(); }
};

// One derivative evaluation: assemble -> regularize -> fold -> solve -> recover.
DerivativeSet rhs(const EnsembleState& state, const ModelSpec& model,
                  const RegularizationOptions& reg = {});

struct RunHooks {
    // Called after every accepted step (diagnostics streaming).
    std::function<void(const StepRecord&)> on_step;
    // Called on every merge event.
    std::function<void(const MergeEvent&)> on_event;
    // Called at output points whose index is a multiple of `checkpoint_every`.
    std::function<void(const EnsembleState&)> on_checkpoint;
    int checkpoint_every = 0;
    bool collect_diagnostics = false;
};

// Adaptive embedded Runge-Kutta 5(4) propagation with PI step control and
// dense output on `output_points` equidistant times. Apoptosis is checked
// after every accepted step; a singular solve mid-step forces one merge
// attempt and a retry.
RunOutput run(const EnsembleState& initial, const ModelSpec& model,
              const IntegratorConfig& integ, const ApoptosisPolicy& policy,
              const RegularizationOptions& reg = {}, const RunHooks& hooks = {});

}  // namespace mdav
