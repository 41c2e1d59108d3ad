#include "cli/formats.hpp"

#include <unistd.h>

#include <cmath>
#include <set>
#include <sstream>

#include "riskflow/error.hpp"
#include "riskflow/scoring.hpp"

namespace riskflow::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace fs = std::filesystem;

std::string format_double(double v) {
    if (!std::isfinite(v)) {
        throw Error(ErrorCode::IoError, "cannot serialize non-finite value");
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string quote(std::string_view s) { return json(std::string(s)).dump(); }

void append_array(std::string& out, const std::vector<double>& values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    out += ']';
}

[[noreturn]] void config_error(const std::string& key, const std::string& why) {
    throw Error(ErrorCode::ConfigError, key + ": " + why, key);
}

const json& require_key(const json& doc, const std::string& key) {
    auto it = doc.find(key);
    if (it == doc.end()) config_error(key, "missing required key");
    return *it;
}

double as_real(const json& v, const std::string& key) {
    if (!v.is_number()) config_error(key, "expected a number");
    return v.get<double>();
}

std::uint64_t as_count(const json& v, const std::string& key) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    config_error(key, "expected a non-negative integer");
}

bool as_bool(const json& v, const std::string& key) {
    if (!v.is_boolean()) config_error(key, "expected true or false");
    return v.get<bool>();
}

std::vector<double> as_reals(const json& v, const std::string& key) {
    if (!v.is_array()) config_error(key, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& x : v) out.push_back(as_real(x, key));
    return out;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& why) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + why, {}, line);
}

[[noreturn]] void audit_error(const std::string& why) {
    throw Error(ErrorCode::ParseError, "audit: " + why);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ordered_json params_to_json(const ScorerParams& p) {
    ordered_json j;
    j["version"] = p.version;
    j["intercept"] = p.intercept;
    j["coefficients"] = p.coefficients;
    j["feature_weights"] = p.feature_weights;
    j["fusion_coefficients"] = p.fusion_coefficients;
    j["fusion_gain"] = p.fusion_gain;
    return j;
}

ScorerParams params_from_json(const json& j, const char* key) {
    if (!j.is_object()) config_error(key, "expected an object");
    ScorerParams p;
    if (auto it = j.find("version"); it != j.end()) p.version = as_count(*it, key);
    if (auto it = j.find("intercept"); it != j.end()) p.intercept = as_real(*it, key);
    p.coefficients = as_reals(require_key(j, "coefficients"), key);
    const std::size_t n = p.coefficients.size();
    auto vec_or = [&](const char* name, double fill) {
        auto it = j.find(name);
        return it == j.end() ? std::vector<double>(n, fill) : as_reals(*it, key);
    };
    p.feature_weights = vec_or("feature_weights", 1.0);
    p.fusion_coefficients = vec_or("fusion_coefficients", 0.0);
    if (auto it = j.find("fusion_gain"); it != j.end()) p.fusion_gain = as_real(*it, key);
    return p;
}

EngineConfig config_from_json(const json& doc) {
    if (!doc.is_object()) config_error("config", "expected a JSON object");
    static const std::set<std::string> known = {
        "feature_dim",        "eta",           "gamma",          "review_band",
        "tau_init",           "tau_min",       "tau_max",        "window_capacity",
        "learning_rate",      "ensemble_size", "metric_window",  "pd_clip_epsilon",
        "seed",               "deterministic_mode", "drift_boost_factor", "join_capacity",
        "queue_capacity",     "top_k",         "scoring_shards", "freeze_after_events",
        "initial_params"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) config_error(key, "unknown key");
    }

    EngineConfig c;
    c.feature_dim = as_count(require_key(doc, "feature_dim"), "feature_dim");
    c.eta = as_real(require_key(doc, "eta"), "eta");
    c.gamma = as_real(require_key(doc, "gamma"), "gamma");
    c.review_band = as_real(require_key(doc, "review_band"), "review_band");
    c.tau_init = as_real(require_key(doc, "tau_init"), "tau_init");
    c.tau_min = as_real(require_key(doc, "tau_min"), "tau_min");
    c.tau_max = as_real(require_key(doc, "tau_max"), "tau_max");
    c.window_capacity = as_count(require_key(doc, "window_capacity"), "window_capacity");
    c.learning_rate = as_real(require_key(doc, "learning_rate"), "learning_rate");
    c.ensemble_size = as_count(require_key(doc, "ensemble_size"), "ensemble_size");
    c.metric_window = as_count(require_key(doc, "metric_window"), "metric_window");
    c.pd_clip_epsilon = as_real(require_key(doc, "pd_clip_epsilon"), "pd_clip_epsilon");
    c.seed = as_count(require_key(doc, "seed"), "seed");
    c.deterministic_mode = as_bool(require_key(doc, "deterministic_mode"), "deterministic_mode");

    if (auto it = doc.find("drift_boost_factor"); it != doc.end()) {
        c.drift_boost_factor = as_real(*it, "drift_boost_factor");
    }
    if (auto it = doc.find("join_capacity"); it != doc.end()) {
        c.join_capacity = as_count(*it, "join_capacity");
    }
    if (auto it = doc.find("queue_capacity"); it != doc.end()) {
        c.queue_capacity = as_count(*it, "queue_capacity");
    }
    if (auto it = doc.find("top_k"); it != doc.end()) c.top_k = as_count(*it, "top_k");
    if (auto it = doc.find("scoring_shards"); it != doc.end()) {
        c.scoring_shards = as_count(*it, "scoring_shards");
    }
    if (auto it = doc.find("freeze_after_events"); it != doc.end() && !it->is_null()) {
        c.freeze_after_events = as_count(*it, "freeze_after_events");
    }
    if (auto it = doc.find("initial_params"); it != doc.end() && !it->is_null()) {
        c.initial_params = params_from_json(*it, "initial_params");
    }
    return validate_config(c);
}

EngineConfig load_config(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        config_error("config", std::string("invalid JSON: ") + e.what());
    }
    return config_from_json(doc);
}

ordered_json config_to_json(const EngineConfig& raw) {
    const EngineConfig c = validate_config(raw);
    ordered_json j;
    j["feature_dim"] = c.feature_dim;
    j["eta"] = c.eta;
    j["gamma"] = c.gamma;
    j["review_band"] = c.review_band;
    j["tau_init"] = c.tau_init;
    j["tau_min"] = c.tau_min;
    j["tau_max"] = c.tau_max;
    j["window_capacity"] = c.window_capacity;
    j["learning_rate"] = c.learning_rate;
    j["ensemble_size"] = c.ensemble_size;
    j["metric_window"] = c.metric_window;
    j["pd_clip_epsilon"] = c.pd_clip_epsilon;
    j["seed"] = c.seed;
    j["deterministic_mode"] = c.deterministic_mode;
    j["drift_boost_factor"] = c.drift_boost_factor;
    j["join_capacity"] = c.join_capacity;
    j["queue_capacity"] = c.queue_capacity;
    j["top_k"] = c.top_k;
    j["scoring_shards"] = c.scoring_shards;
    if (c.freeze_after_events) j["freeze_after_events"] = *c.freeze_after_events;
    j["initial_params"] = params_to_json(*c.initial_params);
    return j;
}

// ---------------------------------------------------------------------------
// Events

StreamEvent parse_event_line(std::string_view line, std::size_t line_number) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        parse_error(line_number, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) parse_error(line_number, "expected a JSON object");
    auto get = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end()) parse_error(line_number, std::string("missing \"") + key + "\"");
        return *it;
    };
    const json& type = get("type");
    const json& id = get("id");
    const json& t = get("t_ms");
    if (!type.is_string()) parse_error(line_number, "\"type\" must be a string");
    if (!id.is_string()) parse_error(line_number, "\"id\" must be a string");
    if (!t.is_number_integer()) parse_error(line_number, "\"t_ms\" must be an integer");

    const std::string kind = type.get<std::string>();
    if (kind == "application") {
        const json& f = get("features");
        if (!f.is_array()) parse_error(line_number, "\"features\" must be an array");
        ApplicantEvent e{id.get<std::string>(), t.get<std::int64_t>(), {}};
        e.raw_features.reserve(f.size());
        for (const json& x : f) {
            if (!x.is_number()) parse_error(line_number, "feature values must be numbers");
            e.raw_features.push_back(x.get<double>());
        }
        return e;
    }
    if (kind == "outcome") {
        const json& label = get("label");
        Outcome o;
        if (label.is_number_integer() && label.get<std::int64_t>() == 0) {
            o = Outcome::Repaid;
        } else if (label.is_number_integer() && label.get<std::int64_t>() == 1) {
            o = Outcome::Defaulted;
        } else {
            parse_error(line_number, "\"label\" must be 0 (repaid) or 1 (defaulted)");
        }
        return OutcomeEvent{id.get<std::string>(), t.get<std::int64_t>(), o};
    }
    parse_error(line_number, "unknown type \"" + kind + "\"");
}

std::string event_to_line(const StreamEvent& event) {
    std::string out;
    if (const auto* a = std::get_if<ApplicantEvent>(&event)) {
        out += "{\"type\":\"application\",\"id\":" + quote(a->applicant_id) +
               ",\"t_ms\":" + std::to_string(a->event_time_ms) + ",\"features\":";
        append_array(out, a->raw_features);
        out += '}';
    } else {
        const auto& o = std::get<OutcomeEvent>(event);
        out += "{\"type\":\"outcome\",\"id\":" + quote(o.applicant_id) +
               ",\"t_ms\":" + std::to_string(o.outcome_time_ms) +
               ",\"label\":" + std::to_string(label_value(o.label)) + '}';
    }
    return out;
}

FileEventSource::FileEventSource(const fs::path& path) : in_(path) {
    if (!in_) throw Error(ErrorCode::IoError, "cannot open " + path.string());
}

std::optional<StreamEvent> FileEventSource::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        return parse_event_line(line, line_);
    }
    if (in_.bad()) throw Error(ErrorCode::IoError, "read failed after line " + std::to_string(line_));
    return std::nullopt;
}

std::vector<StreamEvent> load_events(const fs::path& path) {
    FileEventSource src(path);
    std::vector<StreamEvent> out;
    while (auto e = src.next()) out.push_back(std::move(*e));
    return out;
}

void write_events(const fs::path& path, const std::vector<StreamEvent>& events) {
    AtomicFile f(path);
    for (const StreamEvent& e : events) f.write(event_to_line(e) + '\n');
    f.commit();
}

// ---------------------------------------------------------------------------
// Audit

std::string audit_line(const AuditHeader& h) {
    return "{\"kind\":\"header\",\"format\":" + quote(h.format) +
           ",\"feature_dim\":" + std::to_string(h.feature_dim) +
           ",\"seed\":" + std::to_string(h.seed) + '}';
}

std::string audit_line(const AuditEnd& e) {
    return "{\"kind\":\"end\",\"decisions\":" + std::to_string(e.decisions) +
           ",\"entries\":" + std::to_string(e.entries) + '}';
}

std::string audit_line(const AuditError& e) {
    return "{\"kind\":\"error\",\"message\":" + quote(e.message) + '}';
}

std::string audit_line(const AuditEntry& entry) {
    std::string out;
    if (const auto* r = std::get_if<DecisionRecord>(&entry)) {
        const RiskAssessment& a = r->assessment;
        out += "{\"kind\":\"decision\",\"seq\":" + std::to_string(r->ingress_seq);
        out += ",\"id\":" + quote(r->applicant_id);
        out += ",\"t_ms\":" + std::to_string(r->decision.decided_at_ms);
        out += ",\"decision\":\"" + std::string(to_string(r->decision.verdict)) + '"';
        out += ",\"pd\":" + format_double(a.pd);
        out += ",\"confidence\":" + format_double(a.confidence);
        out += ",\"tau\":" + format_double(r->decision.tau_used);
        out += ",\"band\":" + format_double(r->decision.band_used);
        out += ",\"params_version\":" + std::to_string(a.params_version);
        out += ",\"scored_at_ms\":" + std::to_string(a.scored_at_ms);
        out += ",\"latency_us\":" + std::to_string(r->latency_us);
        out += ",\"attributions\":";
        append_array(out, a.attributions.values);
        out += ",\"explanation\":[";
        for (std::size_t i = 0; i < r->explanation.size(); ++i) {
            if (i) out += ',';
            out += '[' + std::to_string(r->explanation[i].feature_index) + ',' +
                   format_double(r->explanation[i].attribution) + ']';
        }
        out += "]}";
    } else if (const auto* p = std::get_if<ParamsPublished>(&entry)) {
        out += "{\"kind\":\"params\",\"window\":" + std::to_string(p->window_index);
        out += ",\"version\":" + std::to_string(p->params.version);
        out += ",\"intercept\":" + format_double(p->params.intercept);
        out += ",\"coefficients\":";
        append_array(out, p->params.coefficients);
        out += ",\"feature_weights\":";
        append_array(out, p->params.feature_weights);
        out += ",\"fusion_coefficients\":";
        append_array(out, p->params.fusion_coefficients);
        out += ",\"fusion_gain\":" + format_double(p->params.fusion_gain) + '}';
    } else if (const auto* l = std::get_if<LossWindow>(&entry)) {
        out += "{\"kind\":\"loss\",\"window\":" + std::to_string(l->window_index) +
               ",\"loss\":" + format_double(l->loss) + '}';
    } else {
        const auto& d = std::get<DriftFlag>(entry);
        out += "{\"kind\":\"drift\",\"window\":" + std::to_string(d.window_index) +
               ",\"metric\":" + format_double(d.metric) +
               ",\"previous_metric\":" + format_double(d.previous_metric) + '}';
    }
    return out;
}

namespace {

const json& field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) audit_error(std::string("missing \"") + key + "\"");
    return *it;
}

double real_field(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number()) audit_error(std::string("\"") + key + "\" must be a number");
    return v.get<double>();
}

std::uint64_t count_field(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number_unsigned()) audit_error(std::string("\"") + key + "\" must be a count");
    return v.get<std::uint64_t>();
}

std::int64_t int_field(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number_integer()) audit_error(std::string("\"") + key + "\" must be an integer");
    return v.get<std::int64_t>();
}

std::vector<double> reals_field(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_array()) audit_error(std::string("\"") + key + "\" must be an array");
    std::vector<double> out;
    for (const json& x : v) {
        if (!x.is_number()) audit_error(std::string("\"") + key + "\" must hold numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

DecisionRecord decision_from_json(const json& j) {
    DecisionRecord r;
    r.ingress_seq = count_field(j, "seq");
    const json& id = field(j, "id");
    if (!id.is_string()) audit_error("\"id\" must be a string");
    r.applicant_id = id.get<std::string>();

    const json& verdict = field(j, "decision");
    auto v = verdict.is_string() ? parse_verdict(verdict.get<std::string>()) : std::nullopt;
    if (!v) audit_error("unknown decision");
    r.decision.verdict = *v;
    r.decision.decided_at_ms = int_field(j, "t_ms");
    r.decision.tau_used = real_field(j, "tau");
    r.decision.band_used = real_field(j, "band");

    RiskAssessment& a = r.assessment;
    a.applicant_id = r.applicant_id;
    a.pd = real_field(j, "pd");
    a.confidence = real_field(j, "confidence");
    a.params_version = count_field(j, "params_version");
    a.scored_at_ms = int_field(j, "scored_at_ms");
    a.attributions.values = reals_field(j, "attributions");
    a.attributions.ranking = rank_by_magnitude(a.attributions.values);
    r.latency_us = int_field(j, "latency_us");

    const json& ex = field(j, "explanation");
    if (!ex.is_array()) audit_error("\"explanation\" must be an array");
    for (const json& item : ex) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_number_unsigned() ||
            !item[1].is_number()) {
            audit_error("explanation items must be [index, attribution]");
        }
        const auto idx = item[0].get<std::size_t>();
        if (idx >= a.attributions.values.size()) audit_error("explanation index out of range");
        r.explanation.push_back({idx, item[1].get<double>()});
    }
    return r;
}

}  // namespace

AuditLine parse_audit_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        audit_error(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) audit_error("expected an object");
    const json& kind_j = field(j, "kind");
    if (!kind_j.is_string()) audit_error("\"kind\" must be a string");
    const std::string kind = kind_j.get<std::string>();

    if (kind == "decision") return AuditEntry{decision_from_json(j)};
    if (kind == "params") {
        ParamsPublished p;
        p.window_index = count_field(j, "window");
        p.params.version = count_field(j, "version");
        p.params.intercept = real_field(j, "intercept");
        p.params.coefficients = reals_field(j, "coefficients");
        p.params.feature_weights = reals_field(j, "feature_weights");
        p.params.fusion_coefficients = reals_field(j, "fusion_coefficients");
        p.params.fusion_gain = real_field(j, "fusion_gain");
        return AuditEntry{p};
    }
    if (kind == "loss") return AuditEntry{LossWindow{count_field(j, "window"), real_field(j, "loss")}};
    if (kind == "drift") {
        return AuditEntry{DriftFlag{count_field(j, "window"), real_field(j, "metric"),
                                    real_field(j, "previous_metric")}};
    }
    if (kind == "header") {
        const json& f = field(j, "format");
        if (!f.is_string()) audit_error("\"format\" must be a string");
        return AuditHeader{f.get<std::string>(), count_field(j, "feature_dim"), count_field(j, "seed")};
    }
    if (kind == "end") return AuditEnd{count_field(j, "decisions"), count_field(j, "entries")};
    if (kind == "error") {
        const json& m = field(j, "message");
        if (!m.is_string()) audit_error("\"message\" must be a string");
        return AuditError{m.get<std::string>()};
    }
    audit_error("unknown kind \"" + kind + "\"");
}

DecisionRecord parse_decision_line(std::string_view line) {
    AuditLine parsed = parse_audit_line(line);
    if (auto* e = std::get_if<AuditEntry>(&parsed)) {
        if (auto* d = std::get_if<DecisionRecord>(e)) return std::move(*d);
    }
    audit_error("not a decision line");
}

std::vector<DecisionRecord> AuditFile::decisions() const {
    std::vector<DecisionRecord> out;
    for (const AuditEntry& e : entries) {
        if (const auto* d = std::get_if<DecisionRecord>(&e)) out.push_back(*d);
    }
    return out;
}

AuditFile parse_audit(std::string_view text) {
    if (text.empty()) audit_error("empty file");
    if (text.back() != '\n') audit_error("truncated: last line is not terminated");

    AuditFile file;
    bool have_header = false;
    bool terminated = false;
    std::uint64_t decisions = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (terminated) audit_error("content after the terminal record");
        AuditLine parsed = parse_audit_line(line);
        if (!have_header) {
            auto* h = std::get_if<AuditHeader>(&parsed);
            if (!h) audit_error("missing header");
            if (h->format != kAuditFormat) audit_error("unsupported format " + h->format);
            file.header = *h;
            have_header = true;
            continue;
        }
        if (auto* e = std::get_if<AuditEntry>(&parsed)) {
            if (std::holds_alternative<DecisionRecord>(*e)) ++decisions;
            file.entries.push_back(std::move(*e));
        } else if (auto* end = std::get_if<AuditEnd>(&parsed)) {
            if (end->decisions != decisions || end->entries != file.entries.size()) {
                audit_error("end record counts disagree with the body");
            }
            file.end = *end;
            terminated = true;
        } else if (auto* err = std::get_if<AuditError>(&parsed)) {
            file.error = *err;
            terminated = true;
        } else {
            audit_error("duplicate header");
        }
    }
    if (!terminated) audit_error("truncated: no end record");
    return file;
}

AuditFile read_audit(const fs::path& path) { return parse_audit(read_file(path)); }

// ---------------------------------------------------------------------------
// Atomic output

AtomicFile::AtomicFile(fs::path path) : path_(std::move(path)) {
    const fs::path dir = path_.has_parent_path() ? path_.parent_path() : fs::path(".");
    temp_ = dir / ("." + path_.filename().string() + ".tmp." + std::to_string(::getpid()));
    std::error_code ec;
    fs::create_directories(dir, ec);
    file_ = std::fopen(temp_.c_str(), "wb");
    if (!file_) throw Error(ErrorCode::IoError, "cannot create " + temp_.string());
}

AtomicFile::~AtomicFile() {
    if (file_) std::fclose(file_);
    if (!committed_) {
        std::error_code ec;
        fs::remove(temp_, ec);
    }
}

void AtomicFile::write(std::string_view text) {
    if (!file_) throw Error(ErrorCode::IoError, "write after commit to " + path_.string());
    if (std::fwrite(text.data(), 1, text.size(), file_) != text.size()) {
        throw Error(ErrorCode::IoError, "write failed for " + temp_.string());
    }
}

void AtomicFile::commit() {
    if (!file_) return;
    const bool ok = std::fflush(file_) == 0 && ::fsync(::fileno(file_)) == 0;
    std::fclose(file_);
    file_ = nullptr;
    if (!ok) throw Error(ErrorCode::IoError, "flush failed for " + temp_.string());
    std::error_code ec;
    fs::rename(temp_, path_, ec);
    if (ec) throw Error(ErrorCode::IoError, "rename to " + path_.string() + ": " + ec.message());
    committed_ = true;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    AtomicFile f(path);
    f.write(contents);
    f.commit();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

AuditWriter::AuditWriter(fs::path path, AuditHeader header) : file_(std::move(path)) {
    file_.write(audit_line(header) + '\n');
}

void AuditWriter::write(const AuditEntry& entry) {
    file_.write(audit_line(entry) + '\n');
    ++entries_;
    if (std::holds_alternative<DecisionRecord>(entry)) ++decisions_;
}

void AuditWriter::abort(const std::string& reason) {
    if (closed_) return;
    file_.write(audit_line(AuditError{reason}) + '\n');
    file_.commit();
    closed_ = true;
}

void AuditWriter::finish() {
    if (closed_) return;
    file_.write(audit_line(AuditEnd{decisions_, entries_}) + '\n');
    file_.commit();
    closed_ = true;
}

AuditTextSink::AuditTextSink(AuditHeader header) : text_(audit_line(header) + '\n') {}

void AuditTextSink::write(const AuditEntry& entry) {
    text_ += audit_line(entry) + '\n';
    ++entries_;
    if (std::holds_alternative<DecisionRecord>(entry)) ++decisions_;
}

void AuditTextSink::abort(const std::string& reason) {
    text_ += audit_line(AuditError{reason}) + '\n';
    aborted_ = true;
}

std::string AuditTextSink::finish() {
    if (!aborted_) text_ += audit_line(AuditEnd{decisions_, entries_}) + '\n';
    return std::move(text_);
}

// ---------------------------------------------------------------------------
// Scenario, truth, reports

sim::ScenarioSpec scenario_from_json(const json& doc) {
    if (!doc.is_object()) config_error("scenario", "expected a JSON object");
    sim::ScenarioSpec s;
    s.n_events = as_count(require_key(doc, "n_events"), "n_events");
    s.feature_dim = as_count(require_key(doc, "feature_dim"), "feature_dim");
    s.true_intercept = as_real(require_key(doc, "true_intercept"), "true_intercept");
    s.true_coefficients = as_reals(require_key(doc, "true_coefficients"), "true_coefficients");
    if (auto it = doc.find("feature_means"); it != doc.end()) {
        s.feature_means = as_reals(*it, "feature_means");
    }
    if (auto it = doc.find("feature_stds"); it != doc.end()) {
        s.feature_stds = as_reals(*it, "feature_stds");
    }
    if (auto it = doc.find("label_delay_events"); it != doc.end()) {
        s.label_delay_events = as_count(*it, "label_delay_events");
    }
    if (auto it = doc.find("seed"); it != doc.end()) s.seed = as_count(*it, "seed");
    if (auto it = doc.find("series_window"); it != doc.end()) {
        s.series_window = as_count(*it, "series_window");
    }
    if (auto it = doc.find("drift"); it != doc.end() && !it->is_null()) {
        if (!it->is_object()) config_error("drift", "expected an object");
        sim::DriftSpec d;
        d.at_event = as_count(require_key(*it, "at_event"), "drift");
        d.new_intercept = as_real(require_key(*it, "new_intercept"), "drift");
        d.new_coefficients = as_reals(require_key(*it, "new_coefficients"), "drift");
        s.drift = d;
    }
    return sim::validate_scenario(s);
}

sim::ScenarioSpec load_scenario(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        config_error("scenario", std::string("invalid JSON: ") + e.what());
    }
    return scenario_from_json(doc);
}

ordered_json scenario_to_json(const sim::ScenarioSpec& s) {
    ordered_json j;
    j["n_events"] = s.n_events;
    j["feature_dim"] = s.feature_dim;
    j["true_intercept"] = s.true_intercept;
    j["true_coefficients"] = s.true_coefficients;
    j["feature_means"] = s.feature_means;
    j["feature_stds"] = s.feature_stds;
    j["label_delay_events"] = s.label_delay_events;
    if (s.drift) {
        ordered_json d;
        d["at_event"] = s.drift->at_event;
        d["new_intercept"] = s.drift->new_intercept;
        d["new_coefficients"] = s.drift->new_coefficients;
        j["drift"] = d;
    } else {
        j["drift"] = nullptr;
    }
    j["seed"] = s.seed;
    j["series_window"] = s.series_window;
    return j;
}

sim::TruthMap load_truth(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    sim::TruthMap truth;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            parse_error(n, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) parse_error(n, "expected a JSON object");
        if (auto type = j.find("type"); type != j.end()) {
            if (*type != "outcome") continue;
            const auto o = std::get<OutcomeEvent>(parse_event_line(line, n));
            truth[o.applicant_id] = label_value(o.label);
            continue;
        }
        auto id = j.find("id");
        auto label = j.find("label");
        if (id == j.end() || !id->is_string()) parse_error(n, "missing string \"id\"");
        if (label == j.end() || !label->is_number_integer() ||
            (label->get<int>() != 0 && label->get<int>() != 1)) {
            parse_error(n, "\"label\" must be 0 or 1");
        }
        truth[id->get<std::string>()] = label->get<int>();
    }
    return truth;
}

void write_truth(const fs::path& path, const std::vector<sim::TruthRecord>& truth) {
    AtomicFile f(path);
    for (const sim::TruthRecord& t : truth) {
        f.write("{\"id\":" + quote(t.applicant_id) + ",\"label\":" + std::to_string(t.label) +
                ",\"true_pd\":" + format_double(t.true_pd) + "}\n");
    }
    f.commit();
}

namespace {

ordered_json opt(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

ordered_json latency_to_json(const LatencySummary& l) {
    ordered_json j;
    j["samples"] = l.samples;
    j["p50_us"] = l.p50_us;
    j["p99_us"] = l.p99_us;
    j["max_us"] = l.max_us;
    j["mean_us"] = l.mean_us;
    j["throughput_per_s"] = l.throughput_per_s;
    return j;
}

ordered_json metrics_to_json(const sim::MetricsReport& m) {
    ordered_json j;
    j["decisions"] = m.decisions;
    j["accuracy"] = opt(m.accuracy);
    j["precision"] = opt(m.precision);
    j["recall"] = opt(m.recall);
    j["review_rate"] = opt(m.review_rate);
    j["final_quartile_accuracy"] = opt(m.final_quartile_accuracy);
    ordered_json c;
    c["tp"] = m.confusion.tp;
    c["fp"] = m.confusion.fp;
    c["tn"] = m.confusion.tn;
    c["fn"] = m.confusion.fn;
    c["reviews"] = m.confusion.reviews;
    j["confusion"] = c;
    ordered_json rolling = ordered_json::array();
    for (const sim::WindowAccuracy& w : m.rolling) {
        ordered_json r;
        r["first_decision"] = w.first_decision;
        r["decisions"] = w.decisions;
        r["scored"] = w.scored;
        r["accuracy"] = opt(w.accuracy);
        rolling.push_back(r);
    }
    j["rolling_accuracy"] = rolling;
    ordered_json hist;
    hist["bins"] = sim::kHistogramBins;
    hist["repaid"] = m.pd_hist_repaid;
    hist["defaulted"] = m.pd_hist_defaulted;
    j["pd_histogram"] = hist;
    if (m.latency) j["latency"] = latency_to_json(*m.latency);
    return j;
}

ordered_json stats_to_json(const PipelineStats& s) {
    ordered_json j;
    j["events_in"] = s.events_in;
    j["decisions"] = s.decisions;
    j["skipped_events"] = s.skipped_events;
    j["outcomes"] = s.outcomes;
    j["orphan_outcomes"] = s.orphan_outcomes;
    j["invalid_outcomes"] = s.invalid_outcomes;
    j["drift_flags"] = s.drift_flags;
    j["snapshots_published"] = s.snapshots_published;
    j["join_evictions"] = s.join_evictions;
    return j;
}

}  // namespace riskflow::cli
