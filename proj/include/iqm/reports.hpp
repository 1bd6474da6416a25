// reports.hpp
// JSON and CSV serialization of every report the pipelines emit. CSV follows
// RFC 4180 (UTF-8, '.' decimal separator, quoting only where needed), and
// doubles are printed with shortest round-trip formatting so identical runs
// produce byte-identical files.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iqm/bell.hpp"
#include "iqm/locality_scan.hpp"
#include "iqm/tree.hpp"

namespace iqm {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

class CsvBuilder {
public:
    CsvBuilder& cell(const std::string& s) {
        if (!first_) line_ += ',';
        line_ += csv_escape(s);
        first_ = false;
        return *this;
    }
    CsvBuilder& cell(double v) { return cell(format_double(v)); }
    CsvBuilder& cell(std::uint64_t v) { return cell(std::to_string(v)); }
    CsvBuilder& cell(int v) { return cell(std::to_string(v)); }
    void end_row() {
        out_ += line_;
        out_ += "\r\n";
        line_.clear();
        first_ = true;
    }
    const std::string& str() const { return out_; }

private:
    std::string out_, line_;
    bool first_ = true;
};

// --------------------------------------------------------------------------- json

inline Json to_json(const SpectrumValue& v) {
    Json j;
    j["index"] = v.index;
    j["label"] = v.label;
    if (v.is_scalar()) {
        j["value"] = v.scalar();
    } else if (v.is_pair()) {
        j["value"] = Json{{"first", v.pair().first}, {"second", v.pair().second}};
    } else {
        j["value"] = Json::array({v.vec().x, v.vec().y, v.vec().z});
    }
    return j;
}

inline Json to_json(const GenerationOp& g) {
    Json j;
    j["world_id"] = g.world_id;
    j["label"] = g.label;
    j["params"] = Json::object();
    for (const auto& [k, v] : g.params) j["params"][k] = v;
    j["spacetime_support"] = Json{{"spatial_extent", g.spacetime_support.spatial_extent},
                                  {"duration", g.spacetime_support.duration}};
    return j;
}

inline Json to_json(const MeasurementSpec& mes) {
    Json j;
    j["label"] = mes.label;
    j["params"] = Json::object();
    for (const auto& [k, v] : mes.params) j["params"][k] = v;
    return j;
}

inline Json to_json(const Interval& ci) { return Json{{"low", ci.low}, {"high", ci.high}}; }

inline Json to_json(const FrequencyTable& t, double ci_z = 1.96) {
    Json j;
    j["generation"] = to_json(t.g);
    j["measurement"] = t.measurement_label;
    j["n"] = t.n;
    j["seed"] = t.seed;
    j["values"] = Json::array();
    for (std::size_t s = 0; s < t.spectrum.size(); ++s) {
        Json row = to_json(t.spectrum[s]);
        row["count"] = t.counts[s];
        row["frequency"] = t.frequency(s);
        row["ci"] = to_json(t.ci(s, ci_z));
        j["values"].push_back(row);
    }
    return j;
}

inline std::string to_csv(const FrequencyTable& t, double ci_z = 1.96) {
    CsvBuilder csv;
    csv.cell("index").cell("label").cell("count").cell("freq").cell("ci_low").cell("ci_high");
    csv.end_row();
    for (std::size_t s = 0; s < t.spectrum.size(); ++s) {
        Interval ci = t.ci(s, ci_z);
        csv.cell(t.spectrum[s].index)
            .cell(t.spectrum[s].label)
            .cell(t.counts[s])
            .cell(t.frequency(s))
            .cell(ci.low)
            .cell(ci.high);
        csv.end_row();
    }
    return csv.str();
}

inline Json to_json(const ConvergenceReport& r) {
    Json j;
    j["checkpoints"] = Json::array();
    for (const auto& cp : r.checkpoints) {
        Json c;
        c["n"] = cp.n;
        c["frequencies"] = cp.frequencies;
        c["ci"] = Json::array();
        for (const auto& ci : cp.ci) c["ci"].push_back(to_json(ci));
        j["checkpoints"].push_back(c);
    }
    j["drifts"] = r.drifts;
    j["max_drift"] = r.max_drift;
    if (r.exponent)
        j["exponent"] = *r.exponent;
    else
        j["exponent"] = nullptr;
    j["verdict"] = r.verdict == ConvergenceVerdict::converging ? "converging" : "inconclusive";
    return j;
}

inline std::string to_csv(const ConvergenceReport& r) {
    CsvBuilder csv;
    csv.cell("n").cell("slot").cell("freq").cell("ci_low").cell("ci_high");
    csv.end_row();
    for (const auto& cp : r.checkpoints) {
        for (std::size_t s = 0; s < cp.frequencies.size(); ++s) {
            csv.cell(cp.n).cell(static_cast<std::uint64_t>(s + 1)).cell(cp.frequencies[s]);
            csv.cell(cp.ci[s].low).cell(cp.ci[s].high);
            csv.end_row();
        }
    }
    return csv.str();
}

inline Json to_json(const MetaDependenceReport& r) {
    Json j;
    j["pairs"] = Json::array();
    for (const auto& p : r.pairs)
        j["pairs"].push_back(Json{{"class_x", p.class_x},
                                  {"class_y", p.class_y},
                                  {"dispersion_x", p.dispersion_x},
                                  {"dispersion_y", p.dispersion_y}});
    if (r.pauli_variance_sum)
        j["pauli_variance_sum"] = *r.pauli_variance_sum;
    else
        j["pauli_variance_sum"] = nullptr;
    return j;
}

inline Json to_json(const ProbabilityTree& tree) {
    Json j;
    j["world_id"] = tree.world_id;
    j["trunk"] = to_json(tree.trunk);
    j["branches"] = Json::array();
    for (const auto& b : tree.branches) {
        Json jb;
        jb["class"] = b.compatibility_class_id;
        jb["specs"] = Json::array();
        for (const auto& s : b.specs) jb["specs"].push_back(to_json(s));
        jb["envelope"] = Json{{"spatial_extent", b.envelope.spatial_extent},
                              {"duration", b.envelope.duration}};
        jb["table"] = to_json(b.table);
        Json space;
        space["n"] = b.space.n;
        space["weights"] = Json::array();
        for (std::size_t s = 0; s < b.space.universe.size(); ++s) {
            Json w = to_json(b.space.universe[s]);
            w["weight"] = b.space.weight(s);
            space["weights"].push_back(w);
        }
        jb["space"] = space;
        j["branches"].push_back(jb);
    }
    return j;
}

inline Json to_json(const FactorizationReport& r) {
    Json j;
    j["n"] = r.n;
    j["first_values"] = r.first_values;
    j["second_values"] = r.second_values;
    j["joint"] = r.joint;
    j["marginal_first"] = r.marginal_first;
    j["marginal_second"] = r.marginal_second;
    j["deviation"] = r.deviation;
    j["deviation_ci"] = Json::array();
    for (const auto& ci : r.deviation_ci) j["deviation_ci"].push_back(to_json(ci));
    j["max_abs_deviation"] = r.max_abs_deviation;
    return j;
}

inline Json to_json(const InterferenceReport& r) {
    Json j;
    j["table_g1"] = to_json(r.table_g1);
    j["table_g2"] = to_json(r.table_g2);
    j["table_g12"] = to_json(r.table_g12);
    j["deviation_from_mixture"] = r.deviation_from_mixture;
    j["deviation_from_raw_sum"] = r.deviation_from_raw_sum;
    j["mixture_deviation_ci"] = Json::array();
    for (const auto& ci : r.mixture_deviation_ci) j["mixture_deviation_ci"].push_back(to_json(ci));
    j["fringe_visibility"] = r.fringe_visibility;
    return j;
}

inline std::string to_csv(const InterferenceReport& r) {
    CsvBuilder csv;
    csv.cell("index").cell("label").cell("p1").cell("p2").cell("p12");
    csv.cell("dev_mixture").cell("dev_raw_sum").cell("ci_low").cell("ci_high");
    csv.end_row();
    for (std::size_t s = 0; s < r.table_g12.spectrum.size(); ++s) {
        csv.cell(r.table_g12.spectrum[s].index).cell(r.table_g12.spectrum[s].label);
        csv.cell(r.table_g1.frequency(s)).cell(r.table_g2.frequency(s)).cell(r.table_g12.frequency(s));
        csv.cell(r.deviation_from_mixture[s]).cell(r.deviation_from_raw_sum[s]);
        csv.cell(r.mixture_deviation_ci[s].low).cell(r.mixture_deviation_ci[s].high);
        csv.end_row();
    }
    return csv.str();
}

inline Json to_json(const Estimate& e) {
    return Json{{"value", e.value}, {"n", e.n}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}};
}

inline Json to_json(const CorrelationTable& t) {
    Json j;
    j["source"] = t.source;
    j["rows"] = Json::array();
    for (const auto& row : t.rows) {
        Json r = to_json(row.e);
        r["a_deg"] = row.a_deg;
        r["b_deg"] = row.b_deg;
        j["rows"].push_back(r);
    }
    return j;
}

inline std::string to_csv(const CorrelationTable& t) {
    CsvBuilder csv;
    csv.cell("a_deg").cell("b_deg").cell("e").cell("ci_low").cell("ci_high").cell("n");
    csv.end_row();
    for (const auto& row : t.rows) {
        csv.cell(row.a_deg).cell(row.b_deg).cell(row.e.value);
        csv.cell(row.e.ci_low).cell(row.e.ci_high).cell(row.e.n);
        csv.end_row();
    }
    return csv.str();
}

inline const char* to_string(PointStatus s) {
    switch (s) {
        case PointStatus::eliminated: return "eliminated";
        case PointStatus::failed: return "failed";
        default: return "ambiguous";
    }
}

inline const char* to_string(ScanOutcome o) {
    switch (o) {
        case ScanOutcome::no_influence_up_to_kappa: return "no_influence_up_to_kappa";
        case ScanOutcome::influence_detected: return "influence_detected";
        default: return "inconclusive";
    }
}

inline Json to_json(const ScanReport& r, const ScanVerdict& verdict) {
    Json j;
    j["config"] = Json{{"d1", r.config.d1},
                       {"d2", r.config.d2},
                       {"v1", r.config.v1},
                       {"v2", r.config.v2},
                       {"margin", r.config.margin},
                       {"n_per_point", r.config.n_per_point},
                       {"z", r.config.z},
                       {"vi_grid", r.config.vi_grid},
                       {"settings",
                        Json{{"a_deg", r.config.settings.a_deg},
                             {"a_prime_deg", r.config.settings.a2_deg},
                             {"b_deg", r.config.settings.b_deg},
                             {"b_prime_deg", r.config.settings.b2_deg}}}};
    j["points"] = Json::array();
    for (const auto& p : r.points) {
        Json jp;
        jp["vi"] = p.vi;
        jp["schedule"] = Json{{"t_mes1", p.schedule.t_mes1},
                              {"delay", p.schedule.delay},
                              {"t_mes2", p.schedule.t_mes2}};
        jp["correlations"] = Json::array();
        for (const auto& row : p.correlations) {
            Json r2 = to_json(row.e);
            r2["a_deg"] = row.a_deg;
            r2["b_deg"] = row.b_deg;
            jp["correlations"].push_back(r2);
        }
        jp["s"] = p.s;
        jp["sigma_s"] = p.sigma_s;
        jp["status"] = to_string(p.status);
        j["points"].push_back(jp);
    }
    j["eliminated"] = r.eliminated;
    Json jv;
    jv["outcome"] = to_string(verdict.outcome);
    if (verdict.outcome == ScanOutcome::influence_detected)
        jv["bracket"] = Json::array({verdict.bracket_low, verdict.bracket_high});
    j["verdict"] = jv;
    return j;
}

inline std::string to_csv(const ScanReport& r) {
    CsvBuilder csv;
    csv.cell("vi").cell("a_deg").cell("b_deg").cell("e").cell("ci_low").cell("ci_high").cell("s");
    csv.end_row();
    for (const auto& p : r.points) {
        for (const auto& row : p.correlations) {
            csv.cell(p.vi).cell(row.a_deg).cell(row.b_deg).cell(row.e.value);
            csv.cell(row.e.ci_low).cell(row.e.ci_high).cell(p.s);
            csv.end_row();
        }
    }
    return csv.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace iqm
