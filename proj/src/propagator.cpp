#include "mdav/propagator.hpp"

#include "mdav/observables.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace mdav {

void IntegratorConfig::validate() const {
    if (!(min_step > 0.0) || !(min_step <= initial_step) || !(initial_step <= max_step))
        throw ConfigurationError("require 0 < min_step <= initial_step <= max_step");
    if (!(rtol > 0.0) || !(atol > 0.0))
        throw ConfigurationError("rtol and atol must be positive");
    if (output_points < 2)
        throw ConfigurationError("output_points must be >= 2");
    if (!(t_final > 0.0))
        throw ConfigurationError("t_final must be positive");
}

DerivativeSet rhs(const EnsembleState& state, const ModelSpec& model,
                  const RegularizationOptions& reg) {
    SystemBlocks blocks = assemble(state, model, reg);
    fold_apoptosis(blocks, state.partition);
    return solve(blocks, state);
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Stepper {
    const ModelSpec& model;
    const RegularizationOptions& reg;
    int ns, m, n;
    SystemBlocks ws;
    double last_rcond = 0.0;
    long long evals = 0;

    Stepper(const ModelSpec& mdl, const RegularizationOptions& r, const EnsembleState& s)
        : model(mdl), reg(r), ns(s.n_system()), m(s.multiplicity()), n(s.n_modes()) {}

    int size() const { return ns * m + m * n; }

    void unpack(const Vector& z, double t, const ConnectivityPartition& part,
                EnsembleState& out) const {
        out.A = Eigen::Map<const Matrix>(z.data(), ns, m);
        out.F = Eigen::Map<const Matrix>(z.data() + ns * m, m, n);
        out.partition = part;
        out.t = t;
    }

    Vector pack(const Matrix& A, const Matrix& F) const {
        Vector z(size());
        Eigen::Map<Matrix>(z.data(), ns, m) = A;
        Eigen::Map<Matrix>(z.data() + ns * m, m, n) = F;
        return z;
    }

    // Derivative of the packed state.
    void eval(double t, const Vector& z, const ConnectivityPartition& part, Vector& dz) {
        EnsembleState s;
        unpack(z, t, part, s);
        assemble(s, model, reg, ws);
        fold_apoptosis(ws, part);
        const DerivativeSet d = solve(ws, s);
        last_rcond = d.rcond;
        ++evals;
        dz.resize(size());
        Eigen::Map<Matrix>(dz.data(), ns, m) = d.Adot;
        Eigen::Map<Matrix>(dz.data() + ns * m, m, n) = d.Fdot;
    }
};

double error_norm(const Vector& diff, const Vector& y0, const Vector& y1, double atol,
                  double rtol) {
    double acc = 0.0;
    const Eigen::Index n = diff.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sr = atol + rtol * std::max(std::abs(y0(i).real()), std::abs(y1(i).real()));
        const double si = atol + rtol * std::max(std::abs(y0(i).imag()), std::abs(y1(i).imag()));
        const double er = diff(i).real() / sr;
        const double ei = diff(i).imag() / si;
        acc += er * er + ei * ei;
    }
    return std::sqrt(acc / static_cast<double>(2 * n));
}

double min_free_distance(const EnsembleState& s) {
    const auto reps = s.partition.representatives();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < reps.size(); ++i)
        for (std::size_t j = i + 1; j < reps.size(); ++j)
            best = std::min(best, (s.F.row(reps[i]) - s.F.row(reps[j])).norm());
    return best;
}

}  // namespace

RunOutput run(const EnsembleState& initial, const ModelSpec& model,
              const IntegratorConfig& integ, const ApoptosisPolicy& policy,
              const RegularizationOptions& reg, const RunHooks& hooks) {
    integ.validate();
    initial.validate();
    const auto wall0 = std::chrono::steady_clock::now();

    RunOutput out;
    Stepper st(model, reg, initial);

    if (integ.t_final <= initial.t)
        throw ConfigurationError("t_final must exceed the state's current time");

    EnsembleState cur = initial;
    Vector y = st.pack(cur.A, cur.F);
    double t = cur.t;
    const double t_end = integ.t_final;
    const int n_out = integ.output_points;
    const double dt_out = (t_end - cur.t) / (n_out - 1);
    const double t_start = cur.t;
    int next_out = 0;

    const auto emit = [&](double t_snap, const Vector& z) {
        EnsembleState snap;
        st.unpack(z, t_snap, cur.partition, snap);
        snap.impose_offsets();
        out.times.push_back(t_snap);
        out.snapshots.push_back(std::move(snap));
        const int idx = static_cast<int>(out.times.size()) - 1;
        if (hooks.on_checkpoint && hooks.checkpoint_every > 0 && idx > 0 &&
            idx % hooks.checkpoint_every == 0)
            hooks.on_checkpoint(out.snapshots.back());
    };

    emit(t, y);
    next_out = 1;

    const auto finalize = [&] {
        out.events = cur.partition.events();
        out.rhs_evaluations = st.evals;
        out.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
        return out;
    };

    const auto abort_run = [&](const std::string& reason, double rcond) {
        EnsembleState s;
        st.unpack(y, t, cur.partition, s);
        out.abort = AbortRecord{reason, t, min_free_distance(s), rcond};
        return finalize();
    };

    Vector k1(st.size()), k2(st.size()), k3(st.size()), k4(st.size()), k5(st.size()),
        k6(st.size()), k7(st.size()), ytmp(st.size()), y1(st.size()), err_vec(st.size());
    bool have_k1 = false;

    double h = std::clamp(integ.initial_step, integ.min_step, integ.max_step);
    double facold = 1e-4;
    constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
    constexpr double facl = 0.2, facr = 10.0;
    bool last_rejected = false;

    while (t < t_end - 1e-14 * std::max(1.0, std::abs(t_end))) {
        if (out.steps_accepted + out.steps_rejected > integ.max_steps)
            return abort_run("max_steps", st.last_rcond);
        h = std::min(h, integ.max_step);
        if (t + h > t_end) h = t_end - t;
        if (h < integ.min_step) return abort_run("step_underflow", st.last_rcond);

        int forced_merges_this_step = 0;
        bool step_error = false;
        double err = 0.0;
        try {
            if (!have_k1) {
                st.eval(t, y, cur.partition, k1);
                have_k1 = true;
            }
            ytmp = y + h * (a21 * k1);
            st.eval(t + c2 * h, ytmp, cur.partition, k2);
            ytmp = y + h * (a31 * k1 + a32 * k2);
            st.eval(t + c3 * h, ytmp, cur.partition, k3);
            ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            st.eval(t + c4 * h, ytmp, cur.partition, k4);
            ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            st.eval(t + c5 * h, ytmp, cur.partition, k5);
            ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            st.eval(t + h, ytmp, cur.partition, k6);
            y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            st.eval(t + h, y1, cur.partition, k7);
            err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            err = error_norm(err_vec, y, y1, integ.atol, integ.rtol);
        } catch (const SingularSystemError& ex) {
            // Try a forced merge at the step-start state, then retry the step.
            EnsembleState s;
            st.unpack(y, t, cur.partition, s);
            auto pairs = apoptosis::detect(s, policy);
            if (policy.enabled && ex.closest_l >= 0) {
                const double d_start = (s.F.row(ex.closest_l) - s.F.row(ex.closest_k)).norm();
                if (d_start < 2.0 * policy.epsilon)
                    pairs.emplace_back(ex.closest_l, ex.closest_k);
            }
            const double e_before = pairs.empty() ? 0.0 : energy(s, model);
            const double n_before = pairs.empty() ? 0.0 : norm_squared(s);
            const std::size_t ev0 = s.partition.events().size();
            if (pairs.empty() || apoptosis::merge_in_place(s, pairs, policy, true) == 0)
                return abort_run("singular_system", ex.rcond);
            auto& evs = s.partition.events_mutable();
            for (std::size_t i = ev0; i < evs.size(); ++i) {
                evs[i].norm_before = n_before;
                evs[i].norm_after = norm_squared(s);
                evs[i].energy_before = e_before;
                evs[i].energy_after = energy(s, model);
                if (hooks.on_event) hooks.on_event(evs[i]);
            }
            cur.partition = s.partition;
            have_k1 = false;
            ++forced_merges_this_step;
            (void)forced_merges_this_step;
            ++out.steps_rejected;
            step_error = true;
        }
        if (step_error) continue;

        if (err <= 1.0) {
            // Accept.
            ++out.steps_accepted;
            const double told = t;
            t += h;

            // Dense output on the equidistant grid strictly inside the step.
            const bool need_dense = next_out < n_out &&
                                    t_start + next_out * dt_out <= t + 1e-14 * std::abs(t);
            Vector rc1, rc2, rc3, rc4, rc5;
            if (need_dense) {
                rc1 = y;
                rc2 = y1 - y;
                rc3 = h * k1 - rc2;
                rc4 = rc2 - h * k7 - rc3;
                rc5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            }
            while (next_out < n_out) {
                const double t_snap = (next_out == n_out - 1)
                                          ? t_end
                                          : t_start + next_out * dt_out;
                if (t_snap > t + 1e-14 * std::max(1.0, std::abs(t))) break;
                if (t_snap >= t - 1e-14 * std::max(1.0, std::abs(t))) {
                    emit(t, y1);
                } else {
                    const double theta = (t_snap - told) / h;
                    ytmp = rc1 + theta * (rc2 + (1.0 - theta) *
                                                    (rc3 + theta * (rc4 + (1.0 - theta) * rc5)));
                    emit(t_snap, ytmp);
                }
                ++next_out;
            }

            y.swap(y1);
            k1.swap(k7);  // FSAL
            have_k1 = true;

            // Re-impose frozen offsets exactly, then bookkeeping.
            EnsembleState s;
            st.unpack(y, t, cur.partition, s);
            s.impose_offsets();
            y = st.pack(s.A, s.F);

            if (policy.enabled) {
                const auto pairs = apoptosis::detect(s, policy);
                if (!pairs.empty()) {
                    const double n_before = norm_squared(s);
                    const double e_before = energy(s, model);
                    const std::size_t ev0 = s.partition.events().size();
                    if (apoptosis::merge_in_place(s, pairs, policy, false) > 0) {
                        const double n_after = norm_squared(s);
                        const double e_after = energy(s, model);
                        auto& evs = s.partition.events_mutable();
                        for (std::size_t i = ev0; i < evs.size(); ++i) {
                            evs[i].norm_before = n_before;
                            evs[i].norm_after = n_after;
                            evs[i].energy_before = e_before;
                            evs[i].energy_after = e_after;
                            if (hooks.on_event) hooks.on_event(evs[i]);
                        }
                        cur.partition = s.partition;
                        have_k1 = false;  // constraint set changed
                    }
                }
            }

            if (hooks.collect_diagnostics || hooks.on_step) {
                StepRecord rec;
                rec.t = t;
                rec.h = h;
                rec.matrix_size = st.ns * st.m + st.n * s.partition.group_count();
                rec.rcond = st.last_rcond;
                rec.min_distance = min_free_distance(s);
                if (hooks.collect_diagnostics) out.diagnostics.push_back(rec);
                if (hooks.on_step) hooks.on_step(rec);
            }

            // Step-size controller (PI / Lund stabilization).
            const double fac11 = std::pow(std::max(err, 1e-16), expo1);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(1.0 / facr, std::min(1.0 / facl, fac / safe));
            double hnew = h / fac;
            if (last_rejected) hnew = std::min(hnew, h);
            facold = std::max(err, 1e-4);
            h = hnew;
            last_rejected = false;
        } else {
            ++out.steps_rejected;
            const double fac11 = std::pow(err, expo1);
            h = h / std::min(1.0 / facl, fac11 / safe);
            last_rejected = true;
        }
    }

    return finalize();
}

}  // namespace mdav
