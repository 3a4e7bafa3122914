#pragma once

#include "mdav/types.hpp"

#include <string>
#include <vector>

namespace mdav {

struct ModelSpec;

// Record of one merge event.
struct MergeEvent {
    double t = 0.0;
    std::vector<int> merged;         // all indices of the affected group
    int representative = -1;
    std::vector<double> distances;   // pairwise distances that triggered it
    bool forced = false;             // merge forced by a singular solve mid-step
    double norm_before = 0.0, norm_after = 0.0;
    double energy_before = 0.0, energy_after = 0.0;
};

// Partition of the coherent states into connectivity groups. Members of a
// group move rigidly with their representative; the stored offset is frozen
// at merge time.
class ConnectivityPartition {
public:
    ConnectivityPartition() = default;
    explicit ConnectivityPartition(int m);

    int size() const { return static_cast<int>(rep_.size()); }
    int group_count() const;
    bool all_singletons() const { return group_count() == size(); }

    int representative_of(int k) const { return rep_[k]; }
    bool is_representative(int k) const { return rep_[k] == k; }
    // Offset of member k relative to its representative (zero vector for
    // representatives themselves).
    const Vector& offset_of(int k) const { return offset_[k]; }

    std::vector<int> representatives() const;
    std::vector<int> members_of(int rep) const;

    // Merge the given set of indices into one group represented by `rep`;
    // offsets are frozen from the rows of F (M x N displacement matrix).
    void merge_group(const std::vector<int>& indices, int rep, const Matrix& F);

    const std::vector<MergeEvent>& events() const { return events_; }
    std::vector<MergeEvent>& events_mutable() { return events_; }
    void record_event(MergeEvent ev) { events_.push_back(std::move(ev)); }

    void validate() const;

private:
    std::vector<int> rep_;       // rep_[k] = representative of k's group
    std::vector<Vector> offset_; // offset_[k] = alpha_k(t0) - alpha_rep(t0)
    std::vector<MergeEvent> events_;
};

// Full dynamical state of the multi coherent-state Ansatz.
//   A: N_S x M coefficient matrix
//   F: M x N displacement matrix (row k = alpha_k)
struct EnsembleState {
    Matrix A;
    Matrix F;
    ConnectivityPartition partition;
    double t = 0.0;

    int n_system() const { return static_cast<int>(A.rows()); }
    int multiplicity() const { return static_cast<int>(A.cols()); }
    int n_modes() const { return static_cast<int>(F.cols()); }

    // Re-impose frozen offsets: F row of every member is rebuilt from its
    // representative row plus the stored offset.
    void impose_offsets();

    void validate() const;
};

// <alpha_l | alpha_k> for normalized multi-mode coherent states.
Complex overlap(const Vector& alpha_l, const Vector& alpha_k);

// 2-product metric distance sqrt(sum_j |alpha_lj - alpha_kj|^2).
double distance(const Vector& alpha_l, const Vector& alpha_k);

// M x M Hermitian overlap matrix of all rows of F.
Matrix overlap_matrix(const Matrix& F);

// <Psi|Psi> of the Ansatz state.
double norm_squared(const EnsembleState& state);

struct InitialStateOptions {
    double noise = 1e-6;        // coefficient magnitude of unpopulated CS
    double grid_spacing = 1.0;  // lattice constant of the placement grid
    double min_distance = 0.05; // placement must keep all pairs farther apart
    unsigned long long seed = 0;
};

// Construct the initial ensemble: CS #1 carries the model's physical initial
// condition; CS #2..M are placed on a deterministic complex lattice around it
// with noise-sized coefficients. The state is normalized.
EnsembleState build_initial_state(const ModelSpec& model, int multiplicity,
                                  const InitialStateOptions& opts);

// Checkpoint (de)serialization; decimal round-trip preserves all 17
// significant digits. `extra` is carried verbatim (e.g. the run config).
std::string serialize_state(const EnsembleState& state, const std::string& extra_json = "");
EnsembleState deserialize_state(const std::string& json_text, std::string* extra_json = nullptr);

}  // namespace mdav
