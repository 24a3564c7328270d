#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ivdtr/common.hpp"

namespace ivdtr {

struct StageObservation {
    std::vector<double> covariates;
    int instrument = 1;  // +1 / -1
    int action = 1;      // +1 / -1
    double reward = 0.0;
};

struct Trajectory {
    std::vector<StageObservation> stages;
};

/// Per-stage covariate dimensions; size() is the number of stages K.
struct Schema {
    std::vector<int> covariate_dims;

    int num_stages() const { return static_cast<int>(covariate_dims.size()); }
    std::vector<std::string> header() const;
    bool operator==(const Schema&) const = default;
};

/// Dimension of the stage-`stage` history (stage is 0-based).
int history_dim(const Schema& schema, int stage);

class Dataset {
public:
    Dataset(Schema schema, std::vector<Trajectory> trajectories);

    const Schema& schema() const { return schema_; }
    int num_stages() const { return schema_.num_stages(); }
    std::size_t size() const { return trajectories_.size(); }
    const Trajectory& operator[](std::size_t i) const { return trajectories_[i]; }
    const std::vector<Trajectory>& trajectories() const { return trajectories_; }

    /// n x dim(H_k) matrix of histories at `stage` (0-based).
    Matrix histories(int stage) const;
    std::vector<int> instruments(int stage) const;
    std::vector<int> actions(int stage) const;
    std::vector<double> rewards(int stage) const;

    Dataset subset(std::span<const std::size_t> rows) const;

    bool operator==(const Dataset&) const;

private:
    Schema schema_;
    std::vector<Trajectory> trajectories_;
};

bool operator==(const StageObservation& a, const StageObservation& b);
bool operator==(const Trajectory& a, const Trajectory& b);

/// Feature layout [x_1, a_1, r_1, x_2, ..., a_{k-1}, r_{k-1}, x_k]; `stage` is 0-based.
std::vector<double> history_at(const Trajectory& traj, int stage);

Schema parse_schema(const std::string& header_line);
Dataset load_csv(const std::string& path, const Schema& schema);
Dataset load_csv(const std::string& path);
Dataset read_csv(std::istream& in, const Schema* expected);
void write_csv(const Dataset& data, std::ostream& out);

struct BatchAssignment {
    std::vector<int> batch_of;  // 0-based batch per trajectory
    int num_batches = 0;

    std::vector<std::size_t> members(int batch) const;
    std::vector<std::size_t> complement(int batch) const;
};

BatchAssignment assign_batches(std::size_t n, int num_batches, Rng& rng);

}  // namespace ivdtr
