#include "mdav/ensemble.hpp"

#include "mdav/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace mdav {

namespace {

void check_same_length(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw DimensionError("coherent-state vectors differ in length: " +
                             std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

}  // namespace

Complex overlap(const Vector& alpha_l, const Vector& alpha_k) {
    check_same_length(alpha_l, alpha_k);
    const Complex expo = -0.5 * alpha_l.squaredNorm() - 0.5 * alpha_k.squaredNorm() +
                         alpha_l.dot(alpha_k);  // dot conjugates the first argument
    return std::exp(expo);
}

double distance(const Vector& alpha_l, const Vector& alpha_k) {
    check_same_length(alpha_l, alpha_k);
    return (alpha_l - alpha_k).norm();
}

Matrix overlap_matrix(const Matrix& F) {
    const int m = static_cast<int>(F.rows());
    Matrix S(m, m);
    RealVector half_norms(m);
    for (int k = 0; k < m; ++k) half_norms(k) = 0.5 * F.row(k).squaredNorm();
    for (int l = 0; l < m; ++l) {
        S(l, l) = 1.0;
        for (int k = l + 1; k < m; ++k) {
            const Complex cross = F.row(l).conjugate().cwiseProduct(F.row(k)).sum();
            S(l, k) = std::exp(-half_norms(l) - half_norms(k) + cross);
            S(k, l) = std::conj(S(l, k));
        }
    }
    return S;
}

double norm_squared(const EnsembleState& state) {
    const Matrix S = overlap_matrix(state.F);
    const Matrix rho = state.A.adjoint() * state.A;
    return rho.cwiseProduct(S).sum().real();
}

// ---------------------------------------------------------------------------
// ConnectivityPartition

ConnectivityPartition::ConnectivityPartition(int m) : rep_(m), offset_(m) {
    std::iota(rep_.begin(), rep_.end(), 0);
}

int ConnectivityPartition::group_count() const {
    int count = 0;
    for (int k = 0; k < size(); ++k)
        if (rep_[k] == k) ++count;
    return count;
}

std::vector<int> ConnectivityPartition::representatives() const {
    std::vector<int> out;
    for (int k = 0; k < size(); ++k)
        if (rep_[k] == k) out.push_back(k);
    return out;
}

std::vector<int> ConnectivityPartition::members_of(int rep) const {
    std::vector<int> out;
    for (int k = 0; k < size(); ++k)
        if (rep_[k] == rep) out.push_back(k);
    return out;
}

void ConnectivityPartition::merge_group(const std::vector<int>& indices, int rep,
                                        const Matrix& F) {
    if (std::find(indices.begin(), indices.end(), rep) == indices.end())
        throw ContractViolationError("representative not contained in its own group");
    for (int k : indices) {
        rep_[k] = rep;
        if (k == rep) {
            offset_[k].resize(0);
        } else {
            offset_[k] = (F.row(k) - F.row(rep)).transpose();
        }
    }
}

void ConnectivityPartition::validate() const {
    for (int k = 0; k < size(); ++k) {
        const int r = rep_[k];
        if (r < 0 || r >= size() || rep_[r] != r)
            throw ContractViolationError("partition corrupted: bad representative chain");
    }
}

// ---------------------------------------------------------------------------
// EnsembleState

void EnsembleState::impose_offsets() {
    for (int k = 0; k < multiplicity(); ++k) {
        const int r = partition.representative_of(k);
        if (r != k)
            F.row(k) = F.row(r) + partition.offset_of(k).transpose();
    }
}

void EnsembleState::validate() const {
    if (A.rows() < 1 || A.cols() < 1 || F.cols() < 1)
        throw ConfigurationError("state dimensions must satisfy N_S, M, N >= 1");
    if (F.rows() != A.cols())
        throw DimensionError("A column count must match F row count");
    if (partition.size() != multiplicity())
        throw DimensionError("partition size must match multiplicity");
    if (!A.allFinite() || !F.allFinite())
        throw ConfigurationError("state contains non-finite entries");
    partition.validate();
}

// ---------------------------------------------------------------------------
// Initial state

namespace {

// Integer lattice points of Z^dim, enumerated shell by shell in increasing
// squared norm, lexicographic within a shell, origin excluded.
class LatticeEnumerator {
public:
    explicit LatticeEnumerator(int dim) : dim_(dim) {}

    std::vector<int> next() {
        while (buffer_.empty()) {
            ++shell_;
            fill_shell(shell_);
        }
        std::vector<int> p = buffer_.front();
        buffer_.erase(buffer_.begin());
        return p;
    }

private:
    void fill_shell(int norm2) {
        std::vector<int> point(dim_, 0);
        recurse(0, norm2, point);
        std::sort(buffer_.begin(), buffer_.end());
    }

    void recurse(int pos, int budget, std::vector<int>& point) {
        if (pos == dim_) {
            if (budget == 0) buffer_.push_back(point);
            return;
        }
        const int limit = static_cast<int>(std::sqrt(static_cast<double>(budget)));
        for (int v = -limit; v <= limit; ++v) {
            if (v * v > budget) continue;
            point[pos] = v;
            recurse(pos + 1, budget - v * v, point);
        }
        point[pos] = 0;
    }

    int dim_;
    int shell_ = 0;
    std::vector<std::vector<int>> buffer_;
};

// Mirror a lattice point: direction d holds the complex coordinate of mode
// dir_modes[d]; the reflection permutes modes, hence directions.
std::vector<int> mirror_point(const std::vector<int>& p, const std::vector<int>& dir_of_mode,
                              const std::vector<int>& dir_modes, const std::vector<int>& sigma) {
    std::vector<int> out(p.size(), 0);
    const int ndir = static_cast<int>(dir_modes.size());
    for (int d = 0; d < ndir; ++d) {
        const int target_mode = sigma[dir_modes[d]];
        const int td = dir_of_mode[target_mode];
        out[2 * td] = p[2 * d];
        out[2 * td + 1] = p[2 * d + 1];
    }
    return out;
}

Vector embed_point(const std::vector<int>& p, const std::vector<int>& dir_modes,
                   double spacing, int n_modes) {
    Vector c = Vector::Zero(n_modes);
    for (std::size_t d = 0; d < dir_modes.size(); ++d)
        c(dir_modes[d]) = spacing * Complex(p[2 * d], p[2 * d + 1]);
    return c;
}

}  // namespace

EnsembleState build_initial_state(const ModelSpec& model, int multiplicity,
                                  const InitialStateOptions& opts) {
    if (multiplicity < 1) throw ConfigurationError("multiplicity must be >= 1");
    if (opts.grid_spacing <= opts.min_distance)
        throw ConfigurationError(
            "placement grid spacing must exceed the minimum pairwise distance");
    model.validate();

    const int n_sys = model.n_system;
    const int n = model.n_modes;

    EnsembleState state;
    state.A = Matrix::Zero(n_sys, multiplicity);
    state.F = Matrix::Zero(multiplicity, n);
    state.partition = ConnectivityPartition(multiplicity);
    state.t = 0.0;

    state.A.col(0) = model.init_amplitudes;
    state.F.row(0) = model.init_displacement.transpose();
    if (multiplicity == 1) {
        state.A /= std::sqrt(norm_squared(state));
        return state;
    }

    // Reflection map; identity when the model has no mirror symmetry.
    std::vector<int> sigma(n);
    if (model.mode_reflection.empty()) {
        std::iota(sigma.begin(), sigma.end(), 0);
    } else {
        sigma = model.mode_reflection;
    }

    // Embedding directions: mode indices in storage order, widened so the
    // set is closed under the reflection.
    const int want = std::min(n, std::max(1, static_cast<int>(
        std::ceil(std::log2(static_cast<double>(multiplicity))))));
    std::vector<int> dir_modes;
    std::vector<char> used(n, 0);
    for (int j = 0; j < n && static_cast<int>(dir_modes.size()) < want; ++j) {
        if (used[j]) continue;
        dir_modes.push_back(j);
        used[j] = 1;
        if (sigma[j] != j && !used[sigma[j]]) {
            dir_modes.push_back(sigma[j]);
            used[sigma[j]] = 1;
        }
    }
    std::vector<int> dir_of_mode(n, -1);
    for (std::size_t d = 0; d < dir_modes.size(); ++d) dir_of_mode[dir_modes[d]] = static_cast<int>(d);

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<Vector> offsets;  // accepted offsets, relative to CS #1
    offsets.push_back(Vector::Zero(n));
    std::set<std::vector<int>> taken;

    const auto fits = [&](const Vector& cand, const std::vector<Vector>& extra) {
        for (const auto& o : offsets)
            if ((cand - o).norm() <= opts.min_distance) return false;
        for (const auto& o : extra)
            if ((cand - o).norm() <= opts.min_distance) return false;
        return true;
    };

    LatticeEnumerator lattice(2 * static_cast<int>(dir_modes.size()));
    int placed = 0;
    long long scanned = 0;
    while (placed < multiplicity - 1) {
        if (++scanned > 2000000)
            throw ConfigurationError("placement grid cannot host the requested multiplicity");
        const std::vector<int> p = lattice.next();
        if (taken.count(p)) continue;
        const std::vector<int> pm = mirror_point(p, dir_of_mode, dir_modes, sigma);
        const bool self_mirrored = (pm == p);
        const int room = multiplicity - 1 - placed;

        const Vector c = embed_point(p, dir_modes, opts.grid_spacing, n);
        if (self_mirrored) {
            if (!fits(c, {})) continue;
            const double phase = 2.0 * M_PI * unif(rng);
            state.F.row(1 + placed) = (model.init_displacement + c).transpose();
            state.A.col(1 + placed) = opts.noise * std::exp(IMAG_UNIT * phase) * model.init_amplitudes;
            taken.insert(p);
            ++placed;
        } else {
            if (room < 2) continue;  // keep the ensemble mirror-closed
            if (taken.count(pm)) continue;
            const Vector cm = embed_point(pm, dir_modes, opts.grid_spacing, n);
            if (!fits(c, {}) || !fits(cm, {c})) continue;
            const double phase = 2.0 * M_PI * unif(rng);
            const Complex amp = opts.noise * std::exp(IMAG_UNIT * phase);
            state.F.row(1 + placed) = (model.init_displacement + c).transpose();
            state.A.col(1 + placed) = amp * model.init_amplitudes;
            state.F.row(2 + placed) = (model.init_displacement + cm).transpose();
            state.A.col(2 + placed) = amp * model.init_amplitudes;
            taken.insert(p);
            taken.insert(pm);
            placed += 2;
        }
    }

    state.A /= std::sqrt(norm_squared(state));
    state.validate();
    return state;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row_re = nlohmann::json::array(), row_im = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row_re.push_back(m(i, j).real());
            row_im.push_back(m(i, j).imag());
        }
        re.push_back(std::move(row_re));
        im.push_back(std::move(row_im));
    }
    return nlohmann::json{{"re", std::move(re)}, {"im", std::move(im)}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    const int rows = static_cast<int>(re.size());
    const int cols = rows > 0 ? static_cast<int>(re[0].size()) : 0;
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int c = 0; c < cols; ++c)
            m(i, c) = Complex(re[i][c].get<double>(), im[i][c].get<double>());
    return m;
}

}  // namespace

std::string serialize_state(const EnsembleState& state, const std::string& extra_json) {
    nlohmann::json j;
    j["format"] = "mdav-checkpoint";
    j["version"] = 1;
    j["t"] = state.t;
    j["a"] = matrix_to_json(state.A);
    j["f"] = matrix_to_json(state.F);
    nlohmann::json part;
    nlohmann::json reps = nlohmann::json::array();
    Matrix offsets = Matrix::Zero(state.multiplicity(), state.n_modes());
    for (int k = 0; k < state.multiplicity(); ++k) {
        reps.push_back(state.partition.representative_of(k));
        if (!state.partition.is_representative(k))
            offsets.row(k) = state.partition.offset_of(k).transpose();
    }
    part["rep"] = std::move(reps);
    part["offset"] = matrix_to_json(offsets);
    nlohmann::json events = nlohmann::json::array();
    for (const auto& ev : state.partition.events()) {
        events.push_back({{"t", ev.t},
                          {"merged", ev.merged},
                          {"representative", ev.representative},
                          {"distances", ev.distances},
                          {"forced", ev.forced},
                          {"norm_before", ev.norm_before},
                          {"norm_after", ev.norm_after},
                          {"energy_before", ev.energy_before},
                          {"energy_after", ev.energy_after}});
    }
    part["events"] = std::move(events);
    j["partition"] = std::move(part);
    if (!extra_json.empty()) j["extra"] = nlohmann::json::parse(extra_json);
    return j.dump(2);
}

EnsembleState deserialize_state(const std::string& json_text, std::string* extra_json) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    if (j.value("format", "") != "mdav-checkpoint")
        throw ConfigurationError("not a checkpoint file");
    EnsembleState state;
    state.t = j.at("t").get<double>();
    state.A = matrix_from_json(j.at("a"));
    state.F = matrix_from_json(j.at("f"));
    const int m = state.multiplicity();
    state.partition = ConnectivityPartition(m);
    const auto& part = j.at("partition");
    const Matrix offsets = matrix_from_json(part.at("offset"));
    std::vector<int> reps = part.at("rep").get<std::vector<int>>();
    // Rebuild groups from the representative array.
    for (int r = 0; r < m; ++r) {
        if (reps[r] != r) continue;
        std::vector<int> group;
        for (int k = 0; k < m; ++k)
            if (reps[k] == r) group.push_back(k);
        if (group.size() > 1) {
            // Reconstruct F-based offsets: temporarily place rows so that
            // merge_group freezes the stored offsets exactly.
            Matrix f_tmp = state.F;
            for (int k : group)
                if (k != r) f_tmp.row(k) = f_tmp.row(r) + offsets.row(k);
            state.partition.merge_group(group, r, f_tmp);
        }
    }
    for (const auto& evj : part.at("events")) {
        MergeEvent ev;
        ev.t = evj.at("t").get<double>();
        ev.merged = evj.at("merged").get<std::vector<int>>();
        ev.representative = evj.at("representative").get<int>();
        ev.distances = evj.at("distances").get<std::vector<double>>();
        ev.forced = evj.value("forced", false);
        ev.norm_before = evj.value("norm_before", 0.0);
        ev.norm_after = evj.value("norm_after", 0.0);
        ev.energy_before = evj.value("energy_before", 0.0);
        ev.energy_after = evj.value("energy_after", 0.0);
        state.partition.record_event(std::move(ev));
    }
    if (extra_json) {
        *extra_json = j.contains("extra") ? j.at("extra").dump() : "";
    }
    state.validate();
    return state;
}

}  // namespace mdav
