#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fdi/csv.hpp"
#include "fdi/errors.hpp"

namespace fdi {

enum class FsmKind { ModelBased, ExperienceBased };

// Fault signature matrix: rows are faults, columns are features (or
// residuals), fields are non-negative scores. Model-based matrices are
// binary indicators; experience-based ones carry importance scores.
class FaultSignatureMatrix {
public:
    FaultSignatureMatrix() = default;
    FaultSignatureMatrix(std::vector<std::string> faults, std::vector<std::string> features,
                         std::vector<std::vector<double>> fields, FsmKind kind)
        : faults_(std::move(faults)),
          features_(std::move(features)),
          fields_(std::move(fields)),
          kind_(kind) {
        if (fields_.size() != faults_.size()) {
            throw Error(Errc::ShapeError, "FSM row count does not match fault count");
        }
        for (const auto& row : fields_) {
            if (row.size() != features_.size()) {
                throw Error(Errc::ShapeError, "FSM row width does not match feature count");
            }
            for (double v : row) {
                if (!(v >= 0.0)) throw Error(Errc::InvalidArgument, "FSM fields must be >= 0");
            }
        }
    }

    const std::vector<std::string>& faults() const { return faults_; }
    const std::vector<std::string>& features() const { return features_; }
    const std::vector<std::vector<double>>& fields() const { return fields_; }
    FsmKind kind() const { return kind_; }

    std::size_t fault_index(const std::string& fault) const {
        const auto it = std::find(faults_.begin(), faults_.end(), fault);
        if (it == faults_.end()) throw Error(Errc::UnknownFault, "unknown fault: " + fault);
        return static_cast<std::size_t>(it - faults_.begin());
    }

    bool is_binary() const {
        for (const auto& row : fields_) {
            for (double v : row) {
                if (v != 0.0 && v != 1.0) return false;
            }
        }
        return true;
    }

private:
    std::vector<std::string> faults_;
    std::vector<std::string> features_;
    std::vector<std::vector<double>> fields_;
    FsmKind kind_ = FsmKind::ModelBased;
};

// Score-valued matrix -> indicator matrix: 1 where score > threshold.
inline FaultSignatureMatrix binarize(const FaultSignatureMatrix& fsm, double threshold) {
    if (!(threshold >= 0.0)) throw Error(Errc::InvalidArgument, "binarize threshold must be >= 0");
    auto fields = fsm.fields();
    for (auto& row : fields) {
        for (auto& v : row) v = v > threshold ? 1.0 : 0.0;
    }
    return {fsm.faults(), fsm.features(), std::move(fields), fsm.kind()};
}

namespace detail {
inline void require_binary(const FaultSignatureMatrix& fsm) {
    if (!fsm.is_binary()) {
        throw Error(Errc::InvalidArgument, "structural analysis requires a binary FSM (binarize first)");
    }
}
}  // namespace detail

// A fault is detectable iff some feature indicates it.
inline bool detectable(const FaultSignatureMatrix& fsm, const std::string& fault) {
    detail::require_binary(fsm);
    const auto& row = fsm.fields()[fsm.fault_index(fault)];
    return std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; });
}

// A fault is isolable iff its signature is nonzero and no other fault
// shares it.
inline bool isolable(const FaultSignatureMatrix& fsm, const std::string& fault) {
    detail::require_binary(fsm);
    const std::size_t idx = fsm.fault_index(fault);
    const auto& row = fsm.fields()[idx];
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) return false;
    for (std::size_t r = 0; r < fsm.fields().size(); ++r) {
        if (r != idx && fsm.fields()[r] == row) return false;
    }
    return true;
}

struct IsolationResult {
    bool fault_detected = false;          // false iff the activation vector is all zero
    std::vector<std::string> matches;     // faults whose signature equals the activation
    std::vector<std::string> nearest;     // Hamming-nearest rows when nothing matches
    int nearest_distance = -1;
};

// Exact-match isolation of an activation vector against the rows. An
// unmatched nonzero activation reports the Hamming-nearest signatures
// as a diagnostic, not as a verdict.
inline IsolationResult isolate(const FaultSignatureMatrix& fsm, const std::vector<int>& activation) {
    detail::require_binary(fsm);
    if (activation.size() != fsm.features().size()) {
        throw Error(Errc::ShapeError, "activation vector length does not match feature count");
    }
    for (int v : activation) {
        if (v != 0 && v != 1) throw Error(Errc::InvalidArgument, "activation entries must be 0 or 1");
    }
    IsolationResult res;
    res.fault_detected = std::any_of(activation.begin(), activation.end(), [](int v) { return v != 0; });
    if (!res.fault_detected) return res;

    int best = static_cast<int>(activation.size()) + 1;
    for (std::size_t r = 0; r < fsm.fields().size(); ++r) {
        int dist = 0;
        for (std::size_t c = 0; c < activation.size(); ++c) {
            dist += (fsm.fields()[r][c] != 0.0) != (activation[c] != 0);
        }
        if (dist == 0) res.matches.push_back(fsm.faults()[r]);
        if (dist < best) {
            best = dist;
            res.nearest.clear();
        }
        if (dist == best) res.nearest.push_back(fsm.faults()[r]);
    }
    if (!res.matches.empty()) {
        res.nearest.clear();
        res.nearest_distance = -1;
    } else {
        res.nearest_distance = best;
    }
    return res;
}

// Tab-separated table, header row of feature names, first column fault
// names; the layout of the printed tables.
inline std::string fsm_to_table(const FaultSignatureMatrix& fsm) {
    std::ostringstream os;
    for (const auto& f : fsm.features()) os << '\t' << f;
    os << '\n';
    for (std::size_t r = 0; r < fsm.faults().size(); ++r) {
        os << fsm.faults()[r];
        for (double v : fsm.fields()[r]) os << '\t' << format_g9(v);
        os << '\n';
    }
    return os.str();
}

inline FaultSignatureMatrix fsm_from_table(std::istream& is, FsmKind kind) {
    std::string line;
    if (!std::getline(is, line)) throw Error(Errc::ParseError, "empty FSM table");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] != '\t') {
        throw Error(Errc::ParseError, "FSM header must start with a tab before the feature names");
    }
    std::vector<std::string> features;
    {
        std::string field;
        std::istringstream hs(line.substr(1));
        while (std::getline(hs, field, '\t')) features.push_back(field);
    }
    if (features.empty()) throw Error(Errc::ParseError, "FSM table has no feature columns");

    std::vector<std::string> faults;
    std::vector<std::vector<double>> fields;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        {
            std::string field;
            std::istringstream ls(line);
            while (std::getline(ls, field, '\t')) cells.push_back(field);
        }
        if (cells.size() != features.size() + 1) {
            throw Error(Errc::ParseError, "wrong column count on line " + std::to_string(line_no));
        }
        faults.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            row.push_back(detail::parse_double(cells[c], line_no));
        }
        fields.push_back(std::move(row));
    }
    if (faults.empty()) throw Error(Errc::ParseError, "FSM table has no fault rows");
    return {std::move(faults), std::move(features), std::move(fields), kind};
}

inline FaultSignatureMatrix fsm_from_file(const std::string& path, FsmKind kind) {
    std::ifstream is(path);
    if (!is) throw Error(Errc::IoError, "cannot open for reading: " + path);
    return fsm_from_table(is, kind);
}

}  // namespace fdi
