#include "ivdtr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ivdtr {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    for (auto& c : cells) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
        auto first = c.find_first_not_of(' ');
        c = first == std::string::npos ? std::string{} : c.substr(first);
    }
    return cells;
}

double parse_real(const std::string& cell, std::size_t row, const std::string& col) {
    if (cell.empty()) {
        throw Error("missing cell at row " + std::to_string(row) + ", column " + col);
    }
    double v = 0.0;
    const char* first = cell.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw Error("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                    ", column " + col);
    }
    return v;
}

int parse_sign(const std::string& cell, std::size_t row, const std::string& col,
               const char* what) {
    if (cell.empty()) {
        throw Error("missing cell at row " + std::to_string(row) + ", column " + col);
    }
    if (cell == "1" || cell == "+1") return 1;
    if (cell == "-1") return -1;
    throw Error(std::string(what) + " not in {-1,+1} at row " + std::to_string(row) +
                ", column " + col + " (got '" + cell + "')");
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

std::vector<std::string> Schema::header() const {
    std::vector<std::string> cols;
    for (int k = 1; k <= num_stages(); ++k) {
        for (int j = 1; j <= covariate_dims[k - 1]; ++j) {
            cols.push_back("x" + std::to_string(k) + "_" + std::to_string(j));
        }
        cols.push_back("z" + std::to_string(k));
        cols.push_back("a" + std::to_string(k));
        cols.push_back("r" + std::to_string(k));
    }
    return cols;
}

int history_dim(const Schema& schema, int stage) {
    require(stage >= 0 && stage < schema.num_stages(), "stage index out of range");
    int dim = 0;
    for (int t = 0; t <= stage; ++t) dim += schema.covariate_dims[t];
    return dim + 2 * stage;
}

bool operator==(const StageObservation& a, const StageObservation& b) {
    return a.covariates == b.covariates && a.instrument == b.instrument &&
           a.action == b.action && a.reward == b.reward;
}

bool operator==(const Trajectory& a, const Trajectory& b) { return a.stages == b.stages; }

Dataset::Dataset(Schema schema, std::vector<Trajectory> trajectories)
    : schema_(std::move(schema)), trajectories_(std::move(trajectories)) {
    require(schema_.num_stages() >= 1, "dataset needs at least one stage");
    for (int d : schema_.covariate_dims) require(d >= 0, "negative covariate dimension");
    require(!trajectories_.empty(), "empty dataset");
    for (std::size_t i = 0; i < trajectories_.size(); ++i) {
        const auto& tr = trajectories_[i];
        require(static_cast<int>(tr.stages.size()) == schema_.num_stages(),
                "trajectory " + std::to_string(i) + " has wrong number of stages");
        for (int k = 0; k < schema_.num_stages(); ++k) {
            const auto& s = tr.stages[k];
            require(static_cast<int>(s.covariates.size()) == schema_.covariate_dims[k],
                    "trajectory " + std::to_string(i) + " has wrong covariate dimension");
            require(s.instrument == 1 || s.instrument == -1, "instrument not in {-1,+1}");
            require(s.action == 1 || s.action == -1, "action not in {-1,+1}");
            require(std::isfinite(s.reward), "reward is not finite");
            for (double x : s.covariates) require(std::isfinite(x), "covariate is not finite");
        }
    }
}

bool Dataset::operator==(const Dataset& other) const {
    return schema_ == other.schema_ && trajectories_ == other.trajectories_;
}

std::vector<double> history_at(const Trajectory& traj, int stage) {
    require(stage >= 0 && stage < static_cast<int>(traj.stages.size()),
            "stage index out of range");
    std::vector<double> h;
    for (int t = 0; t <= stage; ++t) {
        const auto& s = traj.stages[t];
        h.insert(h.end(), s.covariates.begin(), s.covariates.end());
        if (t < stage) {
            h.push_back(static_cast<double>(s.action));
            h.push_back(s.reward);
        }
    }
    return h;
}

Matrix Dataset::histories(int stage) const {
    const int dim = history_dim(schema_, stage);
    Matrix m(static_cast<Eigen::Index>(size()), dim);
    for (std::size_t i = 0; i < size(); ++i) {
        const auto h = history_at(trajectories_[i], stage);
        std::copy(h.begin(), h.end(), m.data() + i * dim);
    }
    return m;
}

std::vector<int> Dataset::instruments(int stage) const {
    std::vector<int> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = trajectories_[i].stages.at(stage).instrument;
    return v;
}

std::vector<int> Dataset::actions(int stage) const {
    std::vector<int> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = trajectories_[i].stages.at(stage).action;
    return v;
}

std::vector<double> Dataset::rewards(int stage) const {
    std::vector<double> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = trajectories_[i].stages.at(stage).reward;
    return v;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    std::vector<Trajectory> picked;
    picked.reserve(rows.size());
    for (auto r : rows) picked.push_back(trajectories_.at(r));
    return Dataset(schema_, std::move(picked));
}

Schema parse_schema(const std::string& header_line) {
    const auto cols = split_csv_line(header_line);
    Schema schema;
    std::size_t pos = 0;
    int k = 1;
    auto malformed = [&](const std::string& why) {
        return Error("malformed header: " + why);
    };
    while (pos < cols.size()) {
        const std::string ks = std::to_string(k);
        int dim = 0;
        while (pos < cols.size() && cols[pos] == "x" + ks + "_" + std::to_string(dim + 1)) {
            ++dim;
            ++pos;
        }
        for (const char* name : {"z", "a", "r"}) {
            if (pos >= cols.size() || cols[pos] != name + ks) {
                throw malformed("expected column '" + std::string(name) + ks + "' at position " +
                                std::to_string(pos + 1));
            }
            ++pos;
        }
        schema.covariate_dims.push_back(dim);
        ++k;
    }
    if (schema.covariate_dims.empty()) throw malformed("no stages");
    return schema;
}

Dataset read_csv(std::istream& in, const Schema* expected) {
    std::string line;
    if (!std::getline(in, line)) throw Error("malformed header: empty file");
    Schema schema = parse_schema(line);
    if (expected != nullptr && !(schema == *expected)) {
        throw Error("malformed header: does not match the expected schema");
    }
    const auto cols = schema.header();
    std::vector<Trajectory> trajs;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != cols.size()) {
            throw Error("inconsistent row width at row " + std::to_string(row) + ": expected " +
                        std::to_string(cols.size()) + " cells, got " +
                        std::to_string(cells.size()));
        }
        Trajectory tr;
        std::size_t c = 0;
        for (int k = 0; k < schema.num_stages(); ++k) {
            StageObservation s;
            for (int j = 0; j < schema.covariate_dims[k]; ++j, ++c) {
                s.covariates.push_back(parse_real(cells[c], row, cols[c]));
            }
            s.instrument = parse_sign(cells[c], row, cols[c], "instrument");
            ++c;
            s.action = parse_sign(cells[c], row, cols[c], "action");
            ++c;
            s.reward = parse_real(cells[c], row, cols[c]);
            ++c;
            tr.stages.push_back(std::move(s));
        }
        trajs.push_back(std::move(tr));
    }
    if (trajs.empty()) throw Error("empty dataset");
    return Dataset(std::move(schema), std::move(trajs));
}

Dataset load_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open data file '" + path + "'");
    return read_csv(in, &schema);
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open data file '" + path + "'");
    return read_csv(in, nullptr);
}

void write_csv(const Dataset& data, std::ostream& out) {
    const auto cols = data.schema().header();
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    for (const auto& tr : data.trajectories()) {
        bool first = true;
        auto put = [&](const std::string& s) {
            out << (first ? "" : ",") << s;
            first = false;
        };
        for (const auto& s : tr.stages) {
            for (double x : s.covariates) put(format_real(x));
            put(std::to_string(s.instrument));
            put(std::to_string(s.action));
            put(format_real(s.reward));
        }
        out << '\n';
    }
}

std::vector<std::size_t> BatchAssignment::members(int batch) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < batch_of.size(); ++i) {
        if (batch_of[i] == batch) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> BatchAssignment::complement(int batch) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < batch_of.size(); ++i) {
        if (batch_of[i] != batch) out.push_back(i);
    }
    return out;
}

BatchAssignment assign_batches(std::size_t n, int num_batches, Rng& rng) {
    require(num_batches >= 2, "cross-fitting needs at least 2 batches");
    require(static_cast<std::size_t>(num_batches) <= n,
            "number of batches exceeds number of trajectories");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    // Fisher-Yates with an explicit draw so the permutation is identical across stdlibs.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    BatchAssignment out;
    out.num_batches = num_batches;
    out.batch_of.assign(n, 0);
    for (std::size_t pos = 0; pos < n; ++pos) {
        out.batch_of[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(num_batches));
    }
    return out;
}

}  // namespace ivdtr
