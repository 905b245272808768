#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfc/dataset.hpp"
#include "cfc/mcts.hpp"

namespace cfc {

/// Per-feature interior quantile cut points (size bins-1 each), fit on the
/// present cells of the training split.
struct BinEdges {
    int bins = 3;
    std::vector<std::vector<double>> edges;

    /// Bin index of a value for a feature: [-inf,e0), [e0,e1), ..., [e_last,+inf).
    int bin_of(int feature, double value) const {
        const auto& e = edges[feature];
        return static_cast<int>(std::upper_bound(e.begin(), e.end(), value) - e.begin());
    }

    double lo(int feature, int bin) const {
        return bin == 0 ? -std::numeric_limits<double>::infinity() : edges[feature][bin - 1];
    }
    double hi(int feature, int bin) const {
        return bin == static_cast<int>(edges[feature].size())
                   ? std::numeric_limits<double>::infinity()
                   : edges[feature][bin];
    }
};

inline BinEdges compute_bin_edges(const Dataset& ds, int bins) {
    if (bins < 2) throw ValidationError("bins must be >= 2");
    BinEdges be;
    be.bins = bins;
    be.edges.resize(ds.p);
    for (int j = 0; j < ds.p; ++j) {
        std::vector<double> vals;
        for (int i = 0; i < ds.n; ++i)
            if (ds.present(i, j)) vals.push_back(ds.value(i, j));
        std::sort(vals.begin(), vals.end());
        for (int b = 1; b < bins; ++b) {
            if (vals.empty()) {
                be.edges[j].push_back(0.0);
            } else {
                auto idx = static_cast<std::size_t>(
                    static_cast<double>(b) / bins * static_cast<double>(vals.size()));
                idx = std::min(idx, vals.size() - 1);
                be.edges[j].push_back(vals[idx]);
            }
        }
    }
    return be;
}

/// Node of the aggregated rule tree. The incoming condition (bin on the
/// parent's acquired feature) is -1 for the children of the virtual root.
struct RuleNode {
    bool is_classify = false;
    int target = 0; // feature index or class index
    int bin_in = -1;
    int visits = 0;
    std::vector<RuleNode> children;
};

struct RuleTree {
    int p = 0;
    int class_count = 0;
    BinEdges bins;
    std::vector<RuleNode> roots;
};

/// One logged trajectory step: the action taken and, for acquisitions, the
/// raw value that was revealed.
struct TrajectoryStep {
    int action = 0; // flat index
    double value = 0.0;
};

inline std::vector<std::vector<TrajectoryStep>>
trajectories_from_records(const std::vector<VisitRecord>& records) {
    std::map<int, std::vector<const VisitRecord*>> by_sample;
    for (const auto& r : records) by_sample[r.sample].push_back(&r);
    std::vector<std::vector<TrajectoryStep>> out;
    for (auto& [sample, recs] : by_sample) {
        std::sort(recs.begin(), recs.end(),
                  [](const VisitRecord* a, const VisitRecord* b) { return a->step < b->step; });
        std::vector<TrajectoryStep> traj;
        for (const auto* r : recs) traj.push_back({r->chosen, r->chosen_value});
        out.push_back(std::move(traj));
    }
    return out;
}

namespace detail {

inline RuleNode* find_or_insert(std::vector<RuleNode>& children, bool is_classify, int target,
                                int bin_in) {
    auto key_less = [](const RuleNode& n, const std::tuple<int, bool, int>& k) {
        return std::tuple{n.bin_in, n.is_classify, n.target} < k;
    };
    std::tuple<int, bool, int> key{bin_in, is_classify, target};
    auto it = std::lower_bound(children.begin(), children.end(), key, key_less);
    if (it == children.end() || std::tuple{it->bin_in, it->is_classify, it->target} != key) {
        RuleNode node;
        node.is_classify = is_classify;
        node.target = target;
        node.bin_in = bin_in;
        it = children.insert(it, std::move(node));
    }
    return &*it;
}

inline void prune(std::vector<RuleNode>& children, int min_visits) {
    std::erase_if(children, [&](const RuleNode& n) { return n.visits < min_visits; });
    for (auto& n : children) prune(n.children, min_visits);
}

} // namespace detail

/// Merge logged trajectories that share the same (action sequence, bin
/// sequence) and drop nodes visited fewer than min_visits times. The result
/// is deterministic and independent of log order.
inline RuleTree aggregate(const std::vector<std::vector<TrajectoryStep>>& trajectories,
                          const BinEdges& bins, int p, int class_count, int min_visits) {
    RuleTree tree;
    tree.p = p;
    tree.class_count = class_count;
    tree.bins = bins;
    for (const auto& traj : trajectories) {
        std::vector<RuleNode>* level = &tree.roots;
        int prev_feature = -1;
        double prev_value = 0.0;
        for (const auto& step : traj) {
            int bin_in = prev_feature < 0 ? -1 : bins.bin_of(prev_feature, prev_value);
            bool is_classify = step.action >= p;
            int target = is_classify ? step.action - p : step.action;
            RuleNode* node = detail::find_or_insert(*level, is_classify, target, bin_in);
            node->visits += 1;
            level = &node->children;
            prev_feature = is_classify ? -1 : target;
            prev_value = step.value;
        }
    }
    detail::prune(tree.roots, min_visits);
    return tree;
}

inline RuleTree aggregate(const std::vector<VisitRecord>& records, const BinEdges& bins, int p,
                          int class_count, int min_visits) {
    return aggregate(trajectories_from_records(records), bins, p, class_count, min_visits);
}

// ---- structured-text (JSON) serialization, lossless round-trip ----

namespace detail {

inline nlohmann::json node_to_json(const RuleNode& n) {
    nlohmann::json j;
    j["bin"] = n.bin_in;
    j["classify"] = n.is_classify;
    j["target"] = n.target;
    j["visits"] = n.visits;
    j["children"] = nlohmann::json::array();
    for (const auto& c : n.children) j["children"].push_back(node_to_json(c));
    return j;
}

inline RuleNode node_from_json(const nlohmann::json& j) {
    RuleNode n;
    n.bin_in = j.at("bin").get<int>();
    n.is_classify = j.at("classify").get<bool>();
    n.target = j.at("target").get<int>();
    n.visits = j.at("visits").get<int>();
    for (const auto& c : j.at("children")) n.children.push_back(node_from_json(c));
    return n;
}

} // namespace detail

inline std::string rule_tree_to_text(const RuleTree& tree) {
    nlohmann::json j;
    j["schema"] = "cfc-rules";
    j["version"] = 1;
    j["p"] = tree.p;
    j["classes"] = tree.class_count;
    j["bins"] = tree.bins.bins;
    j["edges"] = tree.bins.edges;
    j["roots"] = nlohmann::json::array();
    for (const auto& r : tree.roots) j["roots"].push_back(detail::node_to_json(r));
    return j.dump(2) + "\n";
}

inline RuleTree rule_tree_from_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("schema") != "cfc-rules" || j.at("version") != 1)
        throw ParseError("unrecognized rule file schema");
    RuleTree tree;
    tree.p = j.at("p").get<int>();
    tree.class_count = j.at("classes").get<int>();
    tree.bins.bins = j.at("bins").get<int>();
    tree.bins.edges = j.at("edges").get<std::vector<std::vector<double>>>();
    for (const auto& r : j.at("roots")) tree.roots.push_back(detail::node_from_json(r));
    return tree;
}

// ---- graph-description (DOT) export ----

namespace detail {

inline std::string fmt_bound(double v) {
    if (v == -std::numeric_limits<double>::infinity()) return "-inf";
    if (v == std::numeric_limits<double>::infinity()) return "inf";
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

inline void dot_node(std::ostream& out, const RuleNode& n, int parent_id, int parent_feature,
                     const std::vector<std::string>& names, const RuleTree& tree, int& next_id) {
    int id = next_id++;
    out << "  n" << id << " [label=\"";
    if (n.is_classify)
        out << "classify " << n.target;
    else
        out << "acquire " << (n.target < static_cast<int>(names.size()) ? names[n.target]
                                                                        : "f" + std::to_string(n.target));
    out << " (N=" << n.visits << ")\"";
    if (n.is_classify) out << " shape=box";
    out << "];\n";
    if (parent_id >= 0) {
        out << "  n" << parent_id << " -> n" << id;
        if (n.bin_in >= 0 && parent_feature >= 0) {
            std::string fname = parent_feature < static_cast<int>(names.size())
                                    ? names[parent_feature]
                                    : "f" + std::to_string(parent_feature);
            out << " [label=\"" << fname << " in [" << fmt_bound(tree.bins.lo(parent_feature, n.bin_in))
                << ", " << fmt_bound(tree.bins.hi(parent_feature, n.bin_in)) << ")\"]";
        }
        out << ";\n";
    }
    int feature = n.is_classify ? -1 : n.target;
    for (const auto& c : n.children) dot_node(out, c, id, feature, names, tree, next_id);
}

} // namespace detail

inline void write_dot(const RuleTree& tree, const std::vector<std::string>& feature_names,
                      std::ostream& out) {
    out << "digraph rules {\n  rankdir=TB;\n";
    out << "  start [label=\"start\" shape=circle];\n";
    int next_id = 0;
    for (const auto& r : tree.roots) {
        int id = next_id;
        detail::dot_node(out, r, -1, -1, feature_names, tree, next_id);
        out << "  start -> n" << id << ";\n";
    }
    out << "}\n";
}

// ---- visit-log persistence (line-delimited JSON, versioned) ----

inline void write_visit_log(const std::string& path, const std::vector<VisitRecord>& records,
                            const BinEdges& bins, int p, int class_count,
                            const std::vector<std::string>& feature_names) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write visit log: " + path);
    nlohmann::json header;
    header["schema"] = "cfc-visitlog";
    header["version"] = 1;
    header["p"] = p;
    header["classes"] = class_count;
    header["bins"] = bins.bins;
    header["edges"] = bins.edges;
    header["features"] = feature_names;
    out << header.dump() << "\n";
    for (const auto& r : records) {
        nlohmann::json j;
        j["sample"] = r.sample;
        j["step"] = r.step;
        j["acquired"] = r.acquired;
        j["values"] = r.acquired_values;
        j["chosen"] = r.chosen;
        j["chosen_value"] = r.chosen_value;
        j["n"] = r.n_counts;
        j["pi"] = r.pi;
        out << j.dump() << "\n";
    }
    if (!out) throw ValidationError("visit log write failed: " + path);
}

struct VisitLog {
    int p = 0;
    int class_count = 0;
    BinEdges bins;
    std::vector<std::string> feature_names;
    std::vector<VisitRecord> records;
};

inline VisitLog read_visit_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open visit log: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty visit log");
    nlohmann::json header = nlohmann::json::parse(line);
    if (header.at("schema") != "cfc-visitlog" || header.at("version") != 1)
        throw ParseError(path + ": unrecognized visit log schema");
    VisitLog log;
    log.p = header.at("p").get<int>();
    log.class_count = header.at("classes").get<int>();
    log.bins.bins = header.at("bins").get<int>();
    log.bins.edges = header.at("edges").get<std::vector<std::vector<double>>>();
    log.feature_names = header.at("features").get<std::vector<std::string>>();
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad record");
        VisitRecord r;
        r.sample = j.at("sample").get<int>();
        r.step = j.at("step").get<int>();
        r.acquired = j.at("acquired").get<std::vector<int>>();
        r.acquired_values = j.at("values").get<std::vector<double>>();
        r.chosen = j.at("chosen").get<int>();
        r.chosen_value = j.at("chosen_value").get<double>();
        r.n_counts = j.at("n").get<std::vector<int>>();
        r.pi = j.at("pi").get<std::vector<double>>();
        log.records.push_back(std::move(r));
    }
    return log;
}

} // namespace cfc
