#include "snapweight/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "snapweight/errors.hpp"

namespace snapweight {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string json_quote(std::string_view s) { return json(std::string(s)).dump(); }

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void check_written(const std::ofstream& out, const std::filesystem::path& path) {
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 1-based column of the first occurrence of "key" in the raw line.
std::size_t column_of(std::string_view line, std::string_view key) {
    const std::string needle = "\"" + std::string(key) + "\"";
    const auto pos = line.find(needle);
    return pos == std::string_view::npos ? 1 : pos + 1;
}

// Field access for one JSON line, reporting positions in that line.
class LineContext {
public:
    LineContext(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

    [[noreturn]] void fail(std::string_view key, const std::string& msg) const {
        throw ParseError(line_no_, column_of(line_, key), msg);
    }

    void only(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view what) const {
        for (const auto& [k, v] : obj.items()) {
            bool ok = false;
            for (auto a : allowed) ok = ok || k == a;
            if (!ok) fail(k, "unknown field '" + k + "' in " + std::string(what));
        }
    }

    const json& member(const json& obj, std::string_view key) const {
        const auto it = obj.find(std::string(key));
        if (it == obj.end()) fail(key, "missing field '" + std::string(key) + "'");
        return *it;
    }

    double number(const json& obj, std::string_view key) const {
        const json& v = member(obj, key);
        if (!v.is_number()) fail(key, "field '" + std::string(key) + "' must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(key, "field '" + std::string(key) + "' must be finite");
        return d;
    }

    std::int64_t integer(const json& obj, std::string_view key) const {
        const json& v = member(obj, key);
        if (!v.is_number_integer()) fail(key, "field '" + std::string(key) + "' must be an integer");
        return v.get<std::int64_t>();
    }

    std::uint64_t unsigned_integer(const json& obj, std::string_view key) const {
        const json& v = member(obj, key);
        if (!v.is_number_unsigned()) fail(key, "field '" + std::string(key) + "' must be a non-negative integer");
        return v.get<std::uint64_t>();
    }

    std::string string(const json& obj, std::string_view key) const {
        const json& v = member(obj, key);
        if (!v.is_string()) fail(key, "field '" + std::string(key) + "' must be a string");
        return v.get<std::string>();
    }

    std::size_t line_no() const { return line_no_; }

private:
    std::string_view line_;
    std::size_t line_no_;
};

json parse_json_line(std::string_view line, std::size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        const std::size_t col = e.byte == 0 ? 1 : std::min<std::size_t>(e.byte, line.size() + 1);
        std::string msg = e.what();
        if (const auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
        throw ParseError(line_no, col, "malformed JSON: " + msg);
    }
}

DatasetHeader parse_header(std::string_view line) {
    const LineContext ctx(line, 1);
    const json j = parse_json_line(line, 1);
    if (!j.is_object()) ctx.fail("", "header must be a JSON object");
    ctx.only(j, {"format", "version", "seed", "sessions"}, "header");
    if (ctx.string(j, "format") != "snapweight-dataset") ctx.fail("format", "not a snapweight dataset");
    const auto version = ctx.integer(j, "version");
    if (version != kDatasetVersion) throw VersionMismatch(static_cast<int>(version), kDatasetVersion);
    DatasetHeader h;
    h.seed = ctx.unsigned_integer(j, "seed");
    const json& sessions = ctx.member(j, "sessions");
    if (!sessions.is_array()) ctx.fail("sessions", "field 'sessions' must be an array");
    std::set<std::string> ids;
    for (const auto& s : sessions) {
        if (!s.is_object()) ctx.fail("sessions", "session entries must be objects");
        ctx.only(s, {"id", "profile", "split", "seed"}, "session");
        SessionInfo info;
        info.id = ctx.string(s, "id");
        const auto profile = parse_environment(ctx.string(s, "profile"));
        if (!profile) ctx.fail("profile", "unknown profile");
        info.profile = *profile;
        const auto split = parse_split(ctx.string(s, "split"));
        if (!split) ctx.fail("split", "unknown split");
        info.split = *split;
        info.seed = ctx.unsigned_integer(s, "seed");
        if (info.id.empty() || !ids.insert(info.id).second) ctx.fail("id", "session id empty or duplicated");
        h.sessions.push_back(std::move(info));
    }
    return h;
}

}  // namespace

// --- dataset -----------------------------------------------------------------

std::string serialize_header(const DatasetHeader& h) {
    std::string s = "{\"format\":\"snapweight-dataset\",\"version\":" + std::to_string(kDatasetVersion) +
                    ",\"seed\":" + std::to_string(h.seed) + ",\"sessions\":[";
    for (std::size_t i = 0; i < h.sessions.size(); ++i) {
        const auto& si = h.sessions[i];
        if (i) s += ',';
        s += "{\"id\":" + json_quote(si.id) + ",\"profile\":" + json_quote(to_string(si.profile)) +
             ",\"split\":" + json_quote(to_string(si.split)) + ",\"seed\":" + std::to_string(si.seed) + "}";
    }
    s += "]}";
    return s;
}

std::string serialize_epoch(const EpochRecord& rec) {
    std::string s = "{\"session_id\":" + json_quote(rec.session_id) + ",\"t\":" + format_double(rec.epoch.time);
    if (rec.epoch.truth) {
        const auto& t = *rec.epoch.truth;
        s += ",\"truth\":{\"x\":" + format_double(t.x) + ",\"y\":" + format_double(t.y) +
             ",\"z\":" + format_double(t.z) + "}";
    }
    s += ",\"measurements\":[";
    for (std::size_t i = 0; i < rec.epoch.measurements.size(); ++i) {
        const auto& m = rec.epoch.measurements[i];
        if (i) s += ',';
        s += "{\"const\":" + json_quote(to_string(m.constellation)) + ",\"sv\":" + std::to_string(m.sv_id) +
             ",\"band\":" + json_quote(to_string(m.band)) + ",\"pr_m\":" + format_double(m.pseudorange) +
             ",\"cn0_dbhz\":" + format_double(m.cn0) + ",\"lock_s\":" + format_double(m.lock_time) +
             ",\"sat_xyz_m\":[" + format_double(m.sat_pos.x) + "," + format_double(m.sat_pos.y) + "," +
             format_double(m.sat_pos.z) + "]}";
    }
    s += "]}";
    return s;
}

EpochRecord parse_epoch_line(std::string_view line, std::size_t line_no, const DatasetHeader& header) {
    const LineContext ctx(line, line_no);
    const json j = parse_json_line(line, line_no);
    if (!j.is_object()) ctx.fail("", "epoch line must be a JSON object");
    ctx.only(j, {"session_id", "t", "truth", "measurements"}, "epoch");
    EpochRecord rec;
    rec.session_id = ctx.string(j, "session_id");
    bool known = false;
    for (const auto& s : header.sessions) known = known || s.id == rec.session_id;
    if (!known) ctx.fail("session_id", "session '" + rec.session_id + "' is not declared in the header");
    rec.epoch.time = ctx.number(j, "t");
    if (const auto it = j.find("truth"); it != j.end()) {
        if (!it->is_object()) ctx.fail("truth", "field 'truth' must be an object");
        ctx.only(*it, {"x", "y", "z"}, "truth");
        rec.epoch.truth = EcefPosition{ctx.number(*it, "x"), ctx.number(*it, "y"), ctx.number(*it, "z")};
    }
    const json& ms = ctx.member(j, "measurements");
    if (!ms.is_array()) ctx.fail("measurements", "field 'measurements' must be an array");
    for (const auto& mj : ms) {
        if (!mj.is_object()) ctx.fail("measurements", "measurement entries must be objects");
        ctx.only(mj, {"const", "sv", "band", "pr_m", "cn0_dbhz", "lock_s", "sat_xyz_m"}, "measurement");
        PseudorangeMeasurement m;
        const auto c = parse_constellation(ctx.string(mj, "const"));
        if (!c) ctx.fail("const", "unknown constellation");
        m.constellation = *c;
        const auto sv = ctx.integer(mj, "sv");
        if (sv < 1 || sv > 1000) ctx.fail("sv", "sv must be in [1, 1000]");
        m.sv_id = static_cast<int>(sv);
        const auto b = parse_band(ctx.string(mj, "band"));
        if (!b) ctx.fail("band", "unknown band");
        m.band = *b;
        m.pseudorange = ctx.number(mj, "pr_m");
        m.cn0 = ctx.number(mj, "cn0_dbhz");
        m.lock_time = ctx.number(mj, "lock_s");
        const json& xyz = ctx.member(mj, "sat_xyz_m");
        if (!xyz.is_array() || xyz.size() != 3) ctx.fail("sat_xyz_m", "sat_xyz_m must be an array of 3 numbers");
        for (const auto& v : xyz)
            if (!v.is_number()) ctx.fail("sat_xyz_m", "sat_xyz_m must be an array of 3 numbers");
        m.sat_pos = {xyz[0].get<double>(), xyz[1].get<double>(), xyz[2].get<double>()};
        rec.epoch.measurements.push_back(m);
    }
    if (auto err = validate(rec.epoch)) ctx.fail("measurements", "invalid epoch: " + *err);
    if (!is_canonical(rec.epoch))
        ctx.fail("measurements", "measurements not in canonical (constellation, sv, band) order");
    return rec;
}

DatasetReader::DatasetReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(1, 1, "missing dataset header");
    line_ = 1;
    header_ = parse_header(line);
}

bool DatasetReader::next(EpochRecord& out) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (line.empty()) continue;
        EpochRecord rec = parse_epoch_line(line, line_, header_);
        if (!current_session_ || *current_session_ != rec.session_id) {
            for (const auto& s : order_)
                if (s == rec.session_id)
                    throw ParseError(line_, column_of(line, "session_id"),
                                     "epochs of session '" + rec.session_id + "' are not contiguous");
            order_.push_back(rec.session_id);
            current_session_ = rec.session_id;
        } else if (rec.epoch.time < last_time_) {
            throw ParseError(line_, column_of(line, "t"), "epoch time decreases within session");
        }
        last_time_ = rec.epoch.time;
        out = std::move(rec);
        return true;
    }
    if (in_.bad()) throw IoError("read error at line " + std::to_string(line_ + 1));
    return false;
}

Dataset read_dataset(const std::filesystem::path& path) {
    DatasetReader reader(path);
    Dataset d;
    d.seed = reader.header().seed;
    d.sessions = reader.header().sessions;
    EpochRecord rec;
    while (reader.next(rec)) d.epochs.push_back(std::move(rec));
    return d;
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << serialize_header({data.seed, data.sessions}) << '\n';
    for (const auto& e : data.epochs) out << serialize_epoch(e) << '\n';
    out.flush();
    check_written(out, path);
}

// --- run configuration ---------------------------------------------------------

namespace {

// One description of every config field serves both parsing and dumping.
// Reading consumes keys from a JSON object and rejects leftovers; writing
// fills a JSON object.
class ConfigReader {
public:
    ConfigReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigInvalid(path_.empty() ? "<root>" : path_, "must be an object");
    }
    static constexpr bool reading = true;

    std::string path(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    template <typename T>
    void field(std::string_view key, T& value) {
        const json* v = take(key);
        if (!v) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v->is_boolean()) throw ConfigInvalid(path(key), "must be true or false");
                value = v->get<bool>();
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v->is_number()) throw ConfigInvalid(path(key), "must be a number");
                value = v->get<T>();
            } else if constexpr (std::is_unsigned_v<T>) {
                if (!v->is_number_unsigned()) throw ConfigInvalid(path(key), "must be a non-negative integer");
                value = v->get<T>();
            } else if constexpr (std::is_integral_v<T>) {
                if (!v->is_number_integer()) throw ConfigInvalid(path(key), "must be an integer");
                value = v->get<T>();
            } else {
                static_assert(sizeof(T) == 0, "unsupported config field type");
            }
        } catch (const json::exception& e) {
            throw ConfigInvalid(path(key), e.what());
        }
    }

    void angle(std::string_view key, double& radians) {
        double deg = radians / kDeg;
        field(key, deg);
        radians = deg * kDeg;
    }

    template <typename E, typename Parse>
    void enumeration(std::string_view key, E& value, Parse parse) {
        const json* v = take(key);
        if (!v) return;
        if (!v->is_string()) throw ConfigInvalid(path(key), "must be a string");
        const auto parsed = parse(v->get<std::string>());
        if (!parsed) throw ConfigInvalid(path(key), "unknown value '" + v->get<std::string>() + "'");
        value = *parsed;
    }

    template <typename Fn>
    void object(std::string_view key, Fn&& fn) {
        const json* v = take(key);
        if (!v) return;
        ConfigReader child(*v, path(key));
        fn(child);
        child.finish();
    }

    /// Array of objects; `make` supplies the default element for index i.
    template <typename T, typename Make, typename Fn>
    void array(std::string_view key, std::vector<T>& items, Make&& make, Fn&& fn) {
        const json* v = take(key);
        if (!v) return;
        if (!v->is_array()) throw ConfigInvalid(path(key), "must be an array");
        items.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            T item = make(i);
            ConfigReader child((*v)[i], path(key) + "[" + std::to_string(i) + "]");
            fn(child, item);
            child.finish();
            items.push_back(std::move(item));
        }
    }

    template <typename E, typename Parse, typename Name>
    void enum_array(std::string_view key, std::vector<E>& items, Parse parse, Name) {
        const json* v = take(key);
        if (!v) return;
        if (!v->is_array()) throw ConfigInvalid(path(key), "must be an array");
        items.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string where = path(key) + "[" + std::to_string(i) + "]";
            if (!(*v)[i].is_string()) throw ConfigInvalid(where, "must be a string");
            const auto parsed = parse((*v)[i].template get<std::string>());
            if (!parsed) throw ConfigInvalid(where, "unknown value '" + (*v)[i].template get<std::string>() + "'");
            items.push_back(*parsed);
        }
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.contains(k)) throw ConfigInvalid(path(k), "unknown field");
    }

private:
    const json* take(std::string_view key) {
        used_.insert(std::string(key));
        const auto it = j_.find(std::string(key));
        return it == j_.end() ? nullptr : &*it;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

class ConfigWriter {
public:
    explicit ConfigWriter(json& j) : j_(j) { j_ = json::object(); }
    static constexpr bool reading = false;

    template <typename T>
    void field(std::string_view key, T& value) {
        j_[std::string(key)] = value;
    }
    void angle(std::string_view key, double& radians) { j_[std::string(key)] = radians / kDeg; }
    template <typename E, typename Parse>
    void enumeration(std::string_view key, E& value, Parse) {
        j_[std::string(key)] = std::string(to_string(value));
    }
    template <typename Fn>
    void object(std::string_view key, Fn&& fn) {
        json child;
        ConfigWriter w(child);
        fn(w);
        j_[std::string(key)] = child;
    }
    template <typename T, typename Make, typename Fn>
    void array(std::string_view key, std::vector<T>& items, Make&&, Fn&& fn) {
        json arr = json::array();
        for (auto& item : items) {
            json child;
            ConfigWriter w(child);
            fn(w, item);
            arr.push_back(child);
        }
        j_[std::string(key)] = arr;
    }
    template <typename E, typename Parse, typename Name>
    void enum_array(std::string_view key, std::vector<E>& items, Parse, Name name) {
        json arr = json::array();
        for (const auto& e : items) arr.push_back(std::string(name(e)));
        j_[std::string(key)] = arr;
    }

private:
    json& j_;
};

template <typename V>
void visit_solver(V& v, SolverConfig& c) {
    v.field("max_iterations", c.max_iterations);
    v.field("step_tolerance", c.step_tolerance);
    v.field("initial_damping", c.initial_damping);
    v.field("damping_up", c.damping_up);
    v.field("damping_down", c.damping_down);
    v.field("max_condition", c.max_condition);
}

template <typename V>
void visit_geodetic(V& v, GeodeticPosition& g) {
    v.angle("latitude", g.latitude);
    v.angle("longitude", g.longitude);
    v.field("height", g.height);
}

template <typename V>
void visit_constellation(V& v, ConstellationSpec& c) {
    // The name selects the defaults for the remaining fields.
    if constexpr (V::reading) {
        Constellation name = c.constellation;
        v.enumeration("name", name, parse_constellation);
        if (name != c.constellation) {
            switch (name) {
                case Constellation::Gps: c = ConstellationSpec::gps(); break;
                case Constellation::Glonass: c = ConstellationSpec::glonass(); break;
                case Constellation::Galileo: c = ConstellationSpec::galileo(); break;
                case Constellation::Beidou: c = ConstellationSpec::beidou(); break;
            }
        }
    } else {
        v.enumeration("name", c.constellation, parse_constellation);
    }
    v.field("sv_count", c.sv_count);
    v.field("planes", c.planes);
    v.field("radius", c.radius);
    v.angle("inclination", c.inclination);
    v.enum_array("bands", c.bands, parse_band, [](Band b) { return to_string(b); });
}

template <typename V>
void visit_scenario(V& v, ScenarioConfig& c) {
    v.field("duration", c.duration);
    v.field("rate", c.rate);
    v.array("constellations", c.constellations, [](std::size_t) { return ConstellationSpec::gps(); },
            [](V& w, ConstellationSpec& s) { visit_constellation(w, s); });
    v.angle("elevation_mask", c.elevation_mask);
    v.field("noise_sigma", c.noise_sigma);
    v.object("noise_model", [&](V& w) {
        w.field("zenith", c.noise_model.zenith);
        w.field("cn0", c.noise_model.cn0);
        w.field("accel", c.noise_model.accel);
    });
    v.array("nlos_curve", c.nlos_curve, [](std::size_t) { return NlosCurvePoint{}; },
            [](V& w, NlosCurvePoint& p) {
                w.angle("elevation", p.elevation);
                w.field("probability", p.probability);
            });
    v.field("nlos_bias_mean", c.nlos_bias_mean);
    v.field("nlos_dwell", c.nlos_dwell);
    v.field("nlos_cn0_penalty", c.nlos_cn0_penalty);
    v.field("nlos_cn0_penalty_sd", c.nlos_cn0_penalty_sd);
    v.field("multipath_cn0_var", c.multipath_cn0_var);
    v.field("multipath_noise_scale", c.multipath_noise_scale);
    v.field("cn0_zenith", c.cn0_zenith);
    v.field("cn0_elevation_drop", c.cn0_elevation_drop);
    v.field("cn0_noise", c.cn0_noise);
    v.field("cycle_slip_at_onset", c.cycle_slip_at_onset);
    v.field("dropout_probability", c.dropout_probability);
    v.field("clock_offset_max", c.clock_offset_max);
    v.field("clock_walk", c.clock_walk);
    v.object("origin", [&](V& w) { visit_geodetic(w, c.origin); });
    v.array("waypoints", c.waypoints, [](std::size_t) { return GeodeticPosition{}; },
            [](V& w, GeodeticPosition& g) { visit_geodetic(w, g); });
    v.field("speed_mean", c.speed_mean);
    v.field("speed_amplitude", c.speed_amplitude);
    v.field("speed_period", c.speed_period);
    v.field("turn_rate_max", c.turn_rate_max);
}

template <typename V>
void visit_profile(V& v, ProfileRequest& p) {
    // The profile tag selects the environment defaults, then overrides apply.
    if constexpr (V::reading) {
        Environment e = p.scenario.profile;
        v.enumeration("profile", e, parse_environment);
        p.scenario = ScenarioConfig::for_environment(e);
    } else {
        v.enumeration("profile", p.scenario.profile, parse_environment);
    }
    v.field("sessions", p.sessions);
    visit_scenario(v, p.scenario);
}

template <typename V>
void visit_run(V& v, RunConfig& c, int& version) {
    v.field("version", version);
    v.field("seed", c.seed);
    v.field("jobs", c.jobs);
    v.object("simulation", [&](V& s) {
        s.angle("origin_jitter", c.simulation.origin_jitter);
        s.object("split", [&](V& w) {
            w.field("train", c.simulation.split.train);
            w.field("validation", c.simulation.split.validation);
            w.field("test", c.simulation.split.test);
        });
        s.array("profiles", c.simulation.profiles, [](std::size_t) { return ProfileRequest{}; },
                [](V& w, ProfileRequest& p) { visit_profile(w, p); });
    });
    v.object("pipeline", [&](V& p) {
        p.angle("elevation_mask", c.pipeline.elevation_mask);
        p.field("gamma", c.pipeline.gamma);
        p.enumeration("label_clock", c.pipeline.label_clock, parse_label_clock);
        p.field("window_capacity", c.pipeline.features.window_capacity);
        p.field("continuity_horizon", c.pipeline.features.continuity_horizon);
        p.field("variance_sentinel", c.pipeline.features.variance_sentinel);
        p.object("solver", [&](V& w) { visit_solver(w, c.pipeline.solver); });
    });
    v.object("train", [&](V& t) {
        t.field("learning_rate", c.train.learning_rate);
        t.field("batch_size", c.train.batch_size);
        t.field("max_epochs", c.train.max_epochs);
        t.field("patience", c.train.patience);
        t.field("hidden_width", c.train.hidden_width);
        t.field("num_layers", c.train.num_layers);
        t.field("beta1", c.train.beta1);
        t.field("beta2", c.train.beta2);
        t.field("epsilon", c.train.epsilon);
        t.field("grad_clip", c.train.grad_clip);
        t.field("stride", c.train_stride);
    });
    v.object("calibration", [&](V& k) {
        k.field("elevation_bins", c.calibration.elevation_bins);
        k.field("cn0_bin_width", c.calibration.cn0_bin_width);
        k.field("accel_bins", c.calibration.accel_bins);
        k.field("min_bin_count", c.calibration.min_bin_count);
        k.field("outlier_k", c.calibration.outlier_k);
    });
    v.object("fde", [&](V& f) {
        f.field("threshold", c.fde.threshold);
        f.field("max_exclusions", c.fde.max_exclusions);
        f.field("min_retained", c.fde.min_retained);
        f.field("a_priori_sigma", c.fde.a_priori_sigma);
    });
    v.object("evaluate", [&](V& e) {
        e.enum_array("strategies", c.strategies, parse_strategy, [](Strategy s) { return to_string(s); });
    });
}

// Re-throws a validation error with the dotted prefix of the sub-config.
template <typename Fn>
void validate_under(const std::string& prefix, Fn&& fn) {
    try {
        fn();
    } catch (const ConfigInvalid& e) {
        const std::string msg = e.what();
        const auto p = msg.find("': ");
        const std::string field = e.field().starts_with(prefix + ".") ? e.field() : prefix + "." + e.field();
        throw ConfigInvalid(field, p == std::string::npos ? msg : msg.substr(p + 3));
    }
}

}  // namespace

void RunConfig::finalize() {
    simulation.seed = seed;
    simulation.jobs = jobs;
    train.seed = seed;
    train.jobs = jobs;
    train.split = simulation.split;
    fde.solver = pipeline.solver;
    fde.elevation_mask = pipeline.elevation_mask;
    calibration.mask = pipeline.elevation_mask;
    if (jobs < 1) throw ConfigInvalid("jobs", "must be >= 1");
    if (train_stride < 1) throw ConfigInvalid("train.stride", "must be >= 1");
    validate_under("simulation", [&] {
        split_counts(3, simulation.split);
        if (simulation.profiles.empty()) throw ConfigInvalid("profiles", "must not be empty");
        for (std::size_t i = 0; i < simulation.profiles.size(); ++i)
            validate_under("profiles[" + std::to_string(i) + "]", [&] {
                if (simulation.profiles[i].sessions < 3) throw ConfigInvalid("sessions", "must be >= 3");
                simulation.profiles[i].scenario.validate();
            });
        simulation.validate();
    });
    validate_under("pipeline", [&] {
        validate_under("solver", [&] { pipeline.solver.validate(); });
        if (!(pipeline.gamma > 0.0)) throw ConfigInvalid("gamma", "must be > 0");
        if (!(pipeline.elevation_mask >= 0.0 && pipeline.elevation_mask < std::numbers::pi / 2))
            throw ConfigInvalid("elevation_mask", "must be in [0, 90)");
        if (pipeline.features.window_capacity < 1) throw ConfigInvalid("window_capacity", "must be >= 1");
        if (!(pipeline.features.continuity_horizon > 0.0))
            throw ConfigInvalid("continuity_horizon", "must be > 0");
    });
    validate_under("train", [&] { train.validate(); });
    validate_under("fde", [&] { fde.validate(); });
    if (!(calibration.cn0_bin_width > 0.0)) throw ConfigInvalid("calibration.cn0_bin_width_dbhz", "must be > 0");
    if (calibration.elevation_bins < 1) throw ConfigInvalid("calibration.elevation_bins", "must be >= 1");
    if (strategies.empty()) throw ConfigInvalid("evaluate.strategies", "must not be empty");
}

RunConfig parse_run_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigInvalid("<root>", std::string("malformed JSON: ") + e.what());
    }
    RunConfig c;
    int version = kConfigVersion;
    ConfigReader r(j, "");
    visit_run(r, c, version);
    r.finish();
    if (version != kConfigVersion) throw VersionMismatch(version, kConfigVersion);
    c.finalize();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

std::string dump_run_config(const RunConfig& cfg) {
    RunConfig copy = cfg;
    int version = kConfigVersion;
    json j;
    ConfigWriter w(j);
    visit_run(w, copy, version);
    return j.dump(2) + "\n";
}

// --- checkpoints ---------------------------------------------------------------

namespace {

json model_to_json(const LstmModel& m) {
    json tensors = json::array();
    for (auto t : m.tensors()) tensors.push_back(std::vector<double>(t.begin(), t.end()));
    return {{"input_width", m.input_width},
            {"hidden_width", m.hidden_width},
            {"num_layers", m.layers.size()},
            {"tensors", tensors}};
}

LstmModel model_from_json(const json& j) {
    LstmModel m = LstmModel::zeros(j.at("input_width").get<std::size_t>(), j.at("hidden_width").get<std::size_t>(),
                                   j.at("num_layers").get<std::size_t>());
    const json& tensors = j.at("tensors");
    auto views = m.tensors();
    if (tensors.size() != views.size()) throw ShapeMismatch("checkpoint tensor count does not match model shape");
    for (std::size_t i = 0; i < views.size(); ++i) {
        const auto values = tensors[i].get<std::vector<double>>();
        if (values.size() != views[i].size()) throw ShapeMismatch("checkpoint tensor size does not match model shape");
        std::copy(values.begin(), values.end(), views[i].begin());
    }
    m.check_shapes();
    return m;
}

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_nullable(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    const auto& r = c.result;
    const auto& st = r.state;
    json history = json::array();
    for (const auto& h : st.history) history.push_back({h.epoch, h.train_loss, finite_or_null(h.val_loss)});
    RunConfig rc;
    rc.train = c.config;
    rc.pipeline = c.pipeline;
    json cfg;
    {
        ConfigWriter w(cfg);
        int version = kConfigVersion;
        visit_run(w, rc, version);
    }
    const json j = {
        {"format", "snapweight-checkpoint"},
        {"version", kCheckpointVersion},
        {"seed", c.config.seed},
        {"dataset_seed", c.dataset_seed},
        {"feature_set", std::string(to_string(r.best.feature_set))},
        {"train", cfg.at("train")},
        {"pipeline", cfg.at("pipeline")},
        {"normalizer", {{"mean", vec_to_json(r.best.normalizer.mean)}, {"scale", vec_to_json(r.best.normalizer.scale)}}},
        {"model", model_to_json(r.best.model)},
        {"resume",
         {{"model", model_to_json(st.current)},
          {"adam", {{"m", st.adam.m}, {"v", st.adam.v}, {"step", st.adam.step}}},
          {"epochs_done", st.epochs_done},
          {"best_val", finite_or_null(st.best_val)},
          {"best_epoch", st.best_epoch},
          {"bad_evals", st.bad_evals},
          {"rng_state", st.rng_state},
          {"stopped_early", r.stopped_early},
          {"history", history}}},
    };
    std::ofstream out = open_out(path);
    out << j.dump() << '\n';
    out.flush();
    check_written(out, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(1, e.byte, std::string("malformed checkpoint: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "snapweight-checkpoint")
            throw ParseError(1, 1, "not a snapweight checkpoint");
        const int version = j.at("version").get<int>();
        if (version != kCheckpointVersion) throw VersionMismatch(version, kCheckpointVersion);
        Checkpoint c;
        c.dataset_seed = j.at("dataset_seed").get<std::uint64_t>();
        {
            RunConfig rc;
            const json cfg = {{"train", j.at("train")}, {"pipeline", j.at("pipeline")}};
            ConfigReader r(cfg, "");
            int v = kConfigVersion;
            visit_run(r, rc, v);
            r.finish();
            c.config = rc.train;
            c.pipeline = rc.pipeline;
        }
        c.config.seed = j.at("seed").get<std::uint64_t>();
        auto& r = c.result;
        const auto fs = parse_feature_set(j.at("feature_set").get<std::string>());
        if (!fs) throw ParseError(1, 1, "unknown feature set in checkpoint");
        r.best.feature_set = *fs;
        r.best.normalizer.mean = vec_from_json(j.at("normalizer").at("mean"));
        r.best.normalizer.scale = vec_from_json(j.at("normalizer").at("scale"));
        r.best.model = model_from_json(j.at("model"));
        if (static_cast<std::size_t>(r.best.normalizer.mean.size()) != r.best.model.input_width ||
            r.best.normalizer.scale.size() != r.best.normalizer.mean.size() ||
            r.best.model.input_width != feature_width(r.best.feature_set))
            throw ShapeMismatch("checkpoint normalizer, model and feature set disagree in width");
        const json& res = j.at("resume");
        auto& st = r.state;
        st.current = model_from_json(res.at("model"));
        st.adam.m = res.at("adam").at("m").get<std::vector<double>>();
        st.adam.v = res.at("adam").at("v").get<std::vector<double>>();
        st.adam.step = res.at("adam").at("step").get<std::uint64_t>();
        st.epochs_done = res.at("epochs_done").get<std::size_t>();
        st.best_val = from_nullable(res.at("best_val"));
        st.best_epoch = res.at("best_epoch").get<std::size_t>();
        st.bad_evals = res.at("bad_evals").get<std::size_t>();
        st.rng_state = res.at("rng_state").get<std::string>();
        r.stopped_early = res.at("stopped_early").get<bool>();
        for (const auto& h : res.at("history"))
            st.history.push_back({h.at(0).get<std::size_t>(), h.at(1).get<double>(), from_nullable(h.at(2))});
        return c;
    } catch (const json::exception& e) {
        throw ParseError(1, 1, std::string("invalid checkpoint: ") + e.what());
    }
}

// --- evaluation outputs ---------------------------------------------------------

void write_error_csv(const ComparisonReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "session_id,t,strategy,h_err_m,v_err_m,converged,n_sv,n_zero_weight\n";
    for (const auto& r : report.records) {
        out << r.session_id << ',' << format_double(r.t) << ',' << to_string(r.strategy) << ','
            << (r.converged ? format_double(r.h_err) : "nan") << ','
            << (r.converged ? format_double(r.v_err) : "nan") << ',' << (r.converged ? 1 : 0) << ',' << r.n_sv
            << ',' << r.n_zero_weight << '\n';
    }
    out.flush();
    check_written(out, path);
}

void write_summary_json(const ComparisonReport& report, std::uint64_t seed, const std::filesystem::path& path) {
    json strategies = json::array();
    for (const auto& s : report.summaries) {
        const auto q = [&](const Quantiles& x) -> json {
            if (s.count == 0) return nullptr;
            return {{"q50", x.q50}, {"q68", x.q68}, {"q95", x.q95}};
        };
        strategies.push_back({{"strategy", std::string(to_string(s.strategy))},
                              {"count", s.count},
                              {"failures", s.failures},
                              {"failure_rate", s.failure_rate()},
                              {"horizontal_m", q(s.h)},
                              {"vertical_m", q(s.v)}});
    }
    const json j = {{"format", "snapweight-summary"}, {"version", 1}, {"seed", seed}, {"strategies", strategies}};
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
    out.flush();
    check_written(out, path);
}

std::vector<SummaryRow> read_summary_json(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "snapweight-summary") throw ParseError(1, 1, "not a summary file");
        std::vector<SummaryRow> out;
        for (const auto& s : j.at("strategies")) {
            SummaryRow r;
            r.strategy = s.at("strategy").get<std::string>();
            r.count = s.at("count").get<std::size_t>();
            r.failures = s.at("failures").get<std::size_t>();
            r.failure_rate = s.at("failure_rate").get<double>();
            const auto q = [](const json& x) {
                return x.is_null() ? Quantiles{NAN, NAN, NAN}
                                   : Quantiles{x.at("q50").get<double>(), x.at("q68").get<double>(),
                                               x.at("q95").get<double>()};
            };
            r.h = q(s.at("horizontal_m"));
            r.v = q(s.at("vertical_m"));
            out.push_back(r);
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(1, 1, std::string("invalid summary: ") + e.what());
    }
}

void write_loss_csv(std::span<const LossPoint> history, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "epoch,train_loss,val_loss\n";
    for (const auto& h : history)
        out << h.epoch << ',' << format_double(h.train_loss) << ',' << format_double(h.val_loss) << '\n';
    out.flush();
    check_written(out, path);
}

void write_feature_cache(std::span<const ProcessedEpoch> epochs, Split split, std::uint64_t seed,
                         const std::filesystem::path& path, bool append) {
    std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    if (!append) {
        out << "{\"format\":\"snapweight-features\",\"version\":" << kFeatureCacheVersion << ",\"seed\":" << seed
            << ",\"columns\":[\"res_mean\",\"res_std\",\"res_min\",\"res_max\",\"res_median\",\"res_mean_abs\","
               "\"res_count_gt5\",\"res_count_gt20\",\"elevation\",\"lock_time\",\"cn0\",\"cn0_mean\",\"cn0_var\","
               "\"window_size\"]}\n";
    }
    for (const auto& pe : epochs) {
        out << "{\"session_id\":" << json_quote(pe.session_id) << ",\"t\":" << format_double(pe.epoch.time)
            << ",\"split\":" << json_quote(to_string(split));
        if (!pe.usable()) {
            out << ",\"failure\":" << json_quote(pe.failure) << "}\n";
            continue;
        }
        const Eigen::MatrixXd rows = raw_feature_rows(pe.residuals, pe.links, FeatureSet::Full);
        out << ",\"rows\":[";
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            if (r) out << ',';
            out << '[';
            for (Eigen::Index c = 0; c < rows.cols(); ++c) out << (c ? "," : "") << format_double(rows(r, c));
            out << ']';
        }
        out << "],\"labels\":[";
        for (std::size_t i = 0; i < pe.labels.size(); ++i) out << (i ? "," : "") << format_double(pe.labels[i]);
        out << "]}\n";
    }
    out.flush();
    check_written(out, path);
}

}  // namespace snapweight
