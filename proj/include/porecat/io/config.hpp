#pragma once

// Run configuration: schema, loading and cross-reference checks.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include "porecat/discretization.hpp"
#include "porecat/geometry.hpp"
#include "porecat/io/csv.hpp"
#include "porecat/io/ini.hpp"
#include "porecat/model/reaction.hpp"
#include "porecat/model/scenario.hpp"
#include "porecat/model/species.hpp"
#include "porecat/model/validators.hpp"
#include "porecat/solvers.hpp"
#include "porecat/studies.hpp"
#include "porecat/timestepping.hpp"
#include "porecat/velocity.hpp"

namespace porecat {

inline constexpr int config_schema_version = 1;

struct OutputConfig {
    std::string directory = "out";
    std::string prefix = "run";
    bool csv = true;
    bool vtk = false;
    bool json = true;
    bool ledger_csv = true;
};

struct DiagnosticsConfig {
    double nonneg_tolerance = 1e-12;
    int norm_interval = 1;
    double ledger_tolerance = 1e-11;
    double cumulative_tolerance = 1e-9;
    double transfer_tolerance = 1e-13;
    double gronwall_omega_max = -1.0;  ///< negative disables the check
    bool comparison = false;
    std::vector<double> comparison_C;  ///< per species; empty means k_de
    bool check = true;                 ///< failing checks give exit code 4
};

struct ConvergeConfig {
    std::string kind = "spatial";  ///< spatial | temporal
    SpatialStudySpec spatial;
    std::vector<double> dts;
    double reference_dt = 0.0;
    double expected_slope = 0.0;   ///< 0 disables the check
    double slope_tolerance = 0.2;
};

struct OracleConfig {
    double tolerance = 0.0;  ///< 0 reports only
    int samples = 11;
    double fine_dt = 0.0;
};

struct RunConfig {
    std::string source;
    CylinderSpec geometry;
    Chemistry chemistry;
    std::vector<std::string> sorption_laws;  ///< as written in the config
    VelocityField velocity = ZeroVelocity{};
    std::string velocity_kind = "zero";
    ScenarioSpec scenario;
    SchemeConfig scheme;
    AdvectionScheme advection = AdvectionScheme::upwind;
    int trace_order = 1;
    LinearSolverConfig solver;
    OutputConfig output;
    DiagnosticsConfig diagnostics;
    ValidationConfig validation;
    std::optional<TriangularCandidate> triangular;
    ConvergeConfig converge;
    OracleConfig oracle;
};

/// Face-normal velocities from a CSV with columns face, normal_velocity;
/// every mesh face must appear exactly once.
inline TabulatedVelocity load_face_velocity(const std::filesystem::path& path, const PoreMesh& mesh) {
    const CsvTable t = read_csv(path);
    const int face = t.column("face"), un = t.column("normal_velocity");
    if (face < 0 || un < 0) throw ConfigError(path.string() + ": expected columns face, normal_velocity");
    const std::size_t n = mesh.bulk.faces.size();
    TabulatedVelocity out;
    out.normal_velocity.assign(n, 0.0);
    std::vector<bool> seen(n, false);
    for (const auto& row : t.rows) {
        const double f = row[face];
        if (f < 0 || f >= static_cast<double>(n) || f != std::floor(f) || seen[static_cast<std::size_t>(f)])
            throw ConfigError(path.string() + ": bad or repeated face index " + std::to_string(f));
        seen[static_cast<std::size_t>(f)] = true;
        out.normal_velocity[static_cast<std::size_t>(f)] = row[un];
    }
    if (t.rows.size() != n)
        throw ConfigError(path.string() + ": expected " + std::to_string(n) + " faces, got " + std::to_string(t.rows.size()));
    return out;
}

namespace detail {

inline std::vector<std::vector<double>> parse_matrix(const IniDocument& doc, const std::string& sec,
                                                     const std::string& key) {
    std::vector<std::vector<double>> m;
    const auto text = doc.get_string(sec, key);
    if (!text) return m;
    for (const auto& row : split(*text, ';')) {
        std::vector<double> r;
        std::istringstream in(row);
        std::string tok;
        while (in >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size()) doc.fail(sec, key, "bad matrix entry '" + tok + "'");
            r.push_back(v);
        }
        m.push_back(std::move(r));
    }
    return m;
}

inline Profile parse_profile(const IniDocument& doc, const std::string& sec, const std::string& stem) {
    Profile p;
    if (auto k = doc.get_string(sec, stem + "_kind")) {
        try {
            p.kind = parse_profile_kind(*k);
        } catch (const ConfigError& e) {
            doc.fail(sec, stem + "_kind", e.what());
        }
    }
    p.mean = doc.get_double(sec, stem + "_mean", 0.0);
    p.amplitude = doc.get_double(sec, stem + "_amplitude", 0.0);
    p.mode = doc.get_int(sec, stem + "_mode", 1);
    return p;
}

/// Mass-action text "A + 2 B <-> P" into stoichiometric vectors.
inline std::pair<std::vector<int>, std::vector<int>> parse_stoichiometry(const IniDocument& doc, const std::string& sec,
                                                                         const std::string& key,
                                                                         const SpeciesSet& species) {
    const std::string text = doc.require_string(sec, key);
    const auto arrow = text.find("<->");
    if (arrow == std::string::npos) doc.fail(sec, key, "expected 'lhs <-> rhs'");
    auto side = [&](const std::string& s) {
        std::vector<int> v(static_cast<std::size_t>(species.size()), 0);
        if (trim(s) == "0") return v;
        for (const auto& term : split(s, '+')) {
            std::istringstream in(term);
            std::string a, b;
            in >> a;
            int coef = 1;
            std::string name = a;
            if (in >> b) {
                coef = std::atoi(a.c_str());
                name = b;
                if (coef <= 0) doc.fail(sec, key, "bad coefficient '" + a + "'");
            }
            const int idx = species.index_of(name);
            if (idx < 0) doc.fail(sec, key, "undeclared species '" + name + "'");
            v[idx] += coef;
        }
        return v;
    };
    return {side(text.substr(0, arrow)), side(text.substr(arrow + 3))};
}

inline SorptionLaw parse_sorption(const IniDocument& doc, const std::string& sec) {
    const std::string law = doc.get_string(sec, "law").value_or("none");
    auto pos = [&](const char* key, std::optional<double> fallback = std::nullopt) {
        auto v = doc.get_double(sec, key);
        if (!v && !fallback) doc.fail(sec, key, "required for law '" + law + "'");
        const double x = v.value_or(*fallback);
        if (!(x > 0.0)) doc.fail(sec, key, "must be > 0 (got " + std::to_string(x) + ")");
        return x;
    };
    try {
        if (law == "none") return SorptionLaw(NoSorption{});
        if (law == "henry") return SorptionLaw(HenryLaw{pos("k_ad"), pos("k_de")});
        if (law == "modified_langmuir")
            return SorptionLaw(ModifiedLangmuirLaw{pos("k_ad"), pos("k_de"), pos("c_inf"), pos("eps_plus", 1e-3),
                                                   pos("b_cap", 10.0)});
        if (law == "langmuir") {
            Bindings b{{"k_ad", pos("k_ad")}, {"k_de", pos("k_de")}, {"c_inf", pos("c_inf")}};
            return SorptionLaw(CustomSorption{RateExpr::parse("k_ad*c*(1-cs/c_inf)-k_de*cs"), b});
        }
        if (law == "custom") {
            Bindings b;
            for (const auto& key : doc.keys(sec)) {
                if (key == "k_ad" || key == "k_de") b[key] = doc.require_double(sec, key);
                if (key.rfind("param.", 0) == 0) b[key.substr(6)] = doc.require_double(sec, key);
            }
            const std::string text = doc.require_string(sec, "expr");
            RateExpr e;
            try {
                e = RateExpr::parse(text);
            } catch (const ParseError& pe) {
                doc.fail(sec, "expr", std::string(pe.what()));
            }
            return SorptionLaw(CustomSorption{std::move(e), std::move(b)});
        }
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        if (what.rfind(doc.source(), 0) == 0) throw;
        doc.fail(sec, "law", what);
    }
    doc.fail(sec, "law", "unknown law '" + law + "' (expected none | henry | modified_langmuir | langmuir | custom)");
}

inline void parse_reaction(const IniDocument& doc, RunConfig& cfg) {
    const std::string sec = "reaction";
    const auto& species = cfg.chemistry.species;
    const int n = species.size();
    const std::string kind = doc.get_string(sec, "kind").value_or("none");
    auto& chem = cfg.chemistry;
    if (kind == "none") {
        chem.reaction = ReactionNetwork(n);
    } else if (kind == "r1") {
        if (n != 3) doc.fail(sec, "kind", "r1 needs exactly three species (A, B, P order), got " + std::to_string(n));
        chem.reaction = ReactionNetwork::r1(doc.get_double(sec, "k_re", 1.0), doc.get_double(sec, "kappa", 1.0));
        chem.conserved = {{1.0, 0.0, 1.0}, {0.0, 1.0, 1.0}};
    } else if (kind == "mass_action") {
        MassActionNetwork net;
        for (int r = 1;; ++r) {
            const std::string key = "reaction." + std::to_string(r);
            if (!doc.find(sec, key)) break;
            auto [f, b] = parse_stoichiometry(doc, sec, key, species);
            net.reactions.push_back({f, b, doc.get_double(sec, "k_re." + std::to_string(r), 1.0),
                                     doc.get_double(sec, "kappa." + std::to_string(r), 1.0)});
        }
        if (net.reactions.empty()) doc.fail(sec, "reaction.1", "mass_action needs reaction.1, reaction.2, ...");
        try {
            chem.reaction = ReactionNetwork(n, std::move(net));
        } catch (const ConfigError& e) {
            doc.fail(sec, "kind", e.what());
        }
    } else if (kind == "custom") {
        CustomNetwork net;
        for (const auto& key : doc.keys(sec))
            if (key.rfind("param.", 0) == 0) net.constants[key.substr(6)] = doc.require_double(sec, key);
        for (const auto& name : species.names) {
            const std::string key = "rate." + name;
            const std::string text = doc.require_string(sec, key);
            try {
                net.rates.push_back(RateExpr::parse(text));
            } catch (const ParseError& pe) {
                doc.fail(sec, key, pe.what());
            }
        }
        for (const auto& key : doc.keys(sec))
            if (key.rfind("rate.", 0) == 0 && species.index_of(key.substr(5)) < 0)
                doc.fail(sec, key, "undeclared species '" + key.substr(5) + "'");
        try {
            chem.reaction = ReactionNetwork(n, std::move(net));
        } catch (const ConfigError& e) {
            doc.fail(sec, "kind", e.what());
        }
    } else {
        doc.fail(sec, "kind", "unknown reaction kind '" + kind + "' (expected none | r1 | mass_action | custom)");
    }
    for (const auto& text : doc.get_strings(sec, "conserved")) {
        std::vector<double> w(static_cast<std::size_t>(n), 0.0);
        for (const auto& name : split(text, '+')) {
            const int idx = species.index_of(name);
            if (idx < 0) doc.fail(sec, "conserved", "undeclared species '" + name + "'");
            w[idx] += 1.0;
        }
        chem.conserved.push_back(std::move(w));
    }
    if (auto Q = parse_matrix(doc, sec, "triangular_Q"); !Q.empty()) {
        TriangularCandidate c{Q, doc.get_double(sec, "triangular_C", 1.0)};
        try {
            c.validate(n);
        } catch (const ConfigError& e) {
            doc.fail(sec, "triangular_Q", e.what());
        }
        cfg.triangular = std::move(c);
    }
}

} // namespace detail

/// Builds a RunConfig from a parsed document. Every key must be consumed.
inline RunConfig config_from_ini(const IniDocument& doc) {
    RunConfig cfg;
    cfg.source = doc.source();
    const int version = doc.get_int("", "schema_version", -1);
    if (version != config_schema_version)
        throw ConfigError(doc.where("", "schema_version") + "schema_version must be " +
                          std::to_string(config_schema_version) + " (got " + std::to_string(version) + ")");

    for (const auto& sec : doc.sections()) {
        static const std::vector<std::string> fixed{"",         "geometry", "species",     "reaction", "velocity",
                                                    "scenario", "scheme",   "solver",      "output",   "diagnostics",
                                                    "validation", "converge", "oracle"};
        if (std::find(fixed.begin(), fixed.end(), sec) != fixed.end()) continue;
        if (sec.rfind("sorption.", 0) == 0 || sec.rfind("initial.", 0) == 0) continue;
        throw ConfigError(doc.where(sec, "") + "unknown section [" + sec + "]");
    }

    // geometry
    auto& g = cfg.geometry;
    g.R = doc.require_double("geometry", "R");
    g.h = doc.require_double("geometry", "h");
    g.n_r = doc.get_int("geometry", "n_r", 8);
    g.n_phi = doc.get_int("geometry", "n_phi", 16);
    g.n_z = doc.get_int("geometry", "n_z", 24);
    g.axisymmetric = doc.get_bool("geometry", "axisymmetric", false);
    try {
        g.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(doc.where("geometry", "R") + e.what());
    }

    // species
    auto& sp = cfg.chemistry.species;
    sp.names = doc.get_strings("species", "names");
    if (sp.names.empty()) doc.fail("species", "names", "at least one species is required");
    sp.d = doc.get_doubles("species", "d");
    sp.d_surface = doc.get_doubles("species", "d_surface");
    if (sp.d.size() != sp.names.size()) doc.fail("species", "d", "need one bulk diffusivity per species");
    if (sp.d_surface.size() != sp.names.size())
        doc.fail("species", "d_surface", "need one surface diffusivity per species");
    for (int i = 0; i < sp.size(); ++i) {
        if (!(sp.d[i] > 0.0))
            doc.fail("species", "d",
                     "species '" + sp.names[i] + "': diffusivity must be > 0 (got " + std::to_string(sp.d[i]) + ")");
        if (!(sp.d_surface[i] > 0.0))
            doc.fail("species", "d_surface",
                     "species '" + sp.names[i] + "': surface diffusivity must be > 0 (got " +
                         std::to_string(sp.d_surface[i]) + ")");
    }
    try {
        sp.validate();
    } catch (const ConfigError& e) {
        doc.fail("species", "names", e.what());
    }

    // per-species sections must name declared species
    for (const auto& sec : doc.sections()) {
        for (const char* stem : {"sorption.", "initial."}) {
            if (sec.rfind(stem, 0) != 0) continue;
            const std::string name = sec.substr(std::string(stem).size());
            if (sp.index_of(name) < 0)
                throw ConfigError(doc.where(sec, "") + "section [" + sec + "] refers to undeclared species '" + name + "'");
        }
    }
    for (const auto& name : sp.names) {
        cfg.chemistry.sorption.push_back(detail::parse_sorption(doc, "sorption." + name));
        cfg.sorption_laws.push_back(doc.get_string("sorption." + name, "law").value_or("none"));
    }
    detail::parse_reaction(doc, cfg);

    // velocity
    cfg.velocity_kind = doc.get_string("velocity", "kind").value_or("zero");
    if (cfg.velocity_kind == "zero") {
        cfg.velocity = ZeroVelocity{};
    } else if (cfg.velocity_kind == "poiseuille") {
        cfg.velocity = PoiseuilleVelocity{doc.require_double("velocity", "u_max")};
    } else if (cfg.velocity_kind == "uniform") {
        const double u = doc.require_double("velocity", "u_max");
        const PoreMesh m = build_mesh(g);
        TabulatedVelocity tab;
        for (const auto& f : m.bulk.faces) tab.normal_velocity.push_back(f.axis == Axis::z ? u * f.normal[2] : 0.0);
        cfg.velocity = std::move(tab);
    } else if (cfg.velocity_kind == "tabulated") {
        namespace fs = std::filesystem;
        fs::path file = doc.require_string("velocity", "file");
        if (file.is_relative()) file = fs::path(doc.source()).parent_path() / file;
        cfg.velocity = load_face_velocity(file, build_mesh(g));
    } else {
        doc.fail("velocity", "kind",
                 "unknown velocity '" + cfg.velocity_kind + "' (expected zero | poiseuille | uniform | tabulated)");
    }

    // scenario
    auto& sc = cfg.scenario;
    sc.t_end = doc.require_double("scenario", "t_end");
    sc.closed_pore = doc.get_bool("scenario", "closed_pore", false);
    sc.g_in = doc.get_doubles("scenario", "g_in");
    if (sc.g_in.empty()) sc.g_in.assign(sp.names.size(), 0.0);
    if (sc.g_in.size() != sp.names.size()) doc.fail("scenario", "g_in", "need one value per species");
    for (const auto& name : sp.names) {
        sc.bulk_initial.push_back(detail::parse_profile(doc, "initial." + name, "bulk"));
        sc.surface_initial.push_back(detail::parse_profile(doc, "initial." + name, "surface"));
    }
    try {
        sc.validate(sp.size(), false);
    } catch (const ConfigError& e) {
        doc.fail("scenario", "t_end", e.what());
    }

    // scheme
    auto& sch = cfg.scheme;
    try {
        sch.kind = parse_scheme_kind(doc.get_string("scheme", "kind").value_or("imex_euler"));
        cfg.advection = parse_advection_scheme(doc.get_string("scheme", "advection").value_or("upwind"));
    } catch (const ConfigError& e) {
        throw ConfigError(doc.where("scheme", "kind") + e.what());
    }
    sch.dt = doc.require_double("scheme", "dt");
    sch.t_end = sc.t_end;
    sch.dt_safety = doc.get_double("scheme", "dt_safety", 0.9);
    sch.enforce_stable_dt = doc.get_bool("scheme", "enforce_stable_dt", true);
    cfg.trace_order = doc.get_int("scheme", "trace_order", 1);
    sch.snapshot_interval = doc.get_int("output", "snapshot_interval", 0);
    try {
        sch.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(doc.where("scheme", "dt") + e.what());
    }
    if (cfg.trace_order != 1 && cfg.trace_order != 2) doc.fail("scheme", "trace_order", "must be 1 or 2");

    // solver
    auto& so = cfg.solver;
    try {
        so.method = parse_krylov_method(doc.get_string("solver", "method").value_or("cg"));
        so.preconditioner = parse_preconditioner(doc.get_string("solver", "preconditioner").value_or("jacobi"));
    } catch (const ConfigError& e) {
        throw ConfigError(doc.where("solver", "method") + e.what());
    }
    so.rel_tol = doc.get_double("solver", "rel_tol", 1e-10);
    so.max_iter = doc.get_int("solver", "max_iter", 10000);
    if (!(so.rel_tol > 0.0)) doc.fail("solver", "rel_tol", "must be > 0");
    if (so.max_iter <= 0) doc.fail("solver", "max_iter", "must be > 0");

    // output
    auto& out = cfg.output;
    out.directory = doc.get_string("output", "directory").value_or("out");
    out.prefix = doc.get_string("output", "prefix").value_or("run");
    if (auto formats = doc.get_strings("output", "formats"); !formats.empty()) {
        out.csv = out.vtk = out.json = out.ledger_csv = false;
        for (const auto& f : formats) {
            if (f == "csv") out.csv = true;
            else if (f == "vtk") out.vtk = true;
            else if (f == "json") out.json = true;
            else if (f == "ledger") out.ledger_csv = true;
            else doc.fail("output", "formats", "unknown format '" + f + "' (expected csv | vtk | json | ledger)");
        }
    }

    // diagnostics
    auto& dg = cfg.diagnostics;
    dg.nonneg_tolerance = doc.get_double("diagnostics", "nonneg_tolerance", dg.nonneg_tolerance);
    dg.norm_interval = doc.get_int("diagnostics", "norm_interval", dg.norm_interval);
    dg.ledger_tolerance = doc.get_double("diagnostics", "ledger_tolerance", dg.ledger_tolerance);
    dg.cumulative_tolerance = doc.get_double("diagnostics", "cumulative_tolerance", dg.cumulative_tolerance);
    dg.transfer_tolerance = doc.get_double("diagnostics", "transfer_tolerance", dg.transfer_tolerance);
    dg.gronwall_omega_max = doc.get_double("diagnostics", "gronwall_omega_max", dg.gronwall_omega_max);
    dg.comparison = doc.get_bool("diagnostics", "comparison", dg.comparison);
    dg.comparison_C = doc.get_doubles("diagnostics", "comparison_C");
    dg.check = doc.get_bool("diagnostics", "check", dg.check);
    if (!dg.comparison_C.empty() && dg.comparison_C.size() != sp.names.size())
        doc.fail("diagnostics", "comparison_C", "need one value per species");

    // validation
    auto& va = cfg.validation;
    va.gamma = doc.get_double("validation", "gamma", va.gamma);
    va.M_growth = doc.get_double("validation", "M_growth", va.M_growth);
    va.sorption_bound = doc.get_double("validation", "sorption_bound", va.sorption_bound);
    va.sorption_points = doc.get_int("validation", "sorption_points", va.sorption_points);
    va.reaction_bound = doc.get_double("validation", "reaction_bound", va.reaction_bound);
    va.reaction_points = doc.get_int("validation", "reaction_points", va.reaction_points);
    try {
        va.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(doc.where("validation", "gamma") + e.what());
    }

    // converge
    auto& cv = cfg.converge;
    cv.kind = doc.get_string("converge", "kind").value_or("spatial");
    if (cv.kind != "spatial" && cv.kind != "temporal") doc.fail("converge", "kind", "expected spatial | temporal");
    auto& ss = cv.spatial;
    ss.preset = doc.get_string("converge", "preset").value_or(ss.preset);
    ss.params.R = g.R;
    ss.params.h = g.h;
    ss.params.d = sp.d[0];
    ss.params.dS = sp.d_surface[0];
    ss.params.u_max = doc.get_double("converge", "u_max", 0.0);
    ss.params.k = doc.get_int("converge", "k", 1);
    ss.params.m = doc.get_int("converge", "m", 1);
    if (auto lv = doc.get_doubles("converge", "levels"); !lv.empty()) {
        ss.levels.clear();
        for (double v : lv) ss.levels.push_back(static_cast<int>(v));
    }
    ss.scheme = sch.kind;
    ss.advection = cfg.advection;
    ss.trace_order = cfg.trace_order;
    ss.t_end = sc.t_end;
    ss.dt = sch.dt;
    ss.dt_follows_mesh = doc.get_bool("converge", "dt_follows_mesh", false);
    cv.dts = doc.get_doubles("converge", "dts");
    cv.reference_dt = doc.get_double("converge", "reference_dt", 0.0);
    cv.expected_slope = doc.get_double("converge", "expected_slope", 0.0);
    cv.slope_tolerance = doc.get_double("converge", "slope_tolerance", 0.2);

    // oracle
    cfg.oracle.tolerance = doc.get_double("oracle", "tolerance", 0.0);
    cfg.oracle.samples = doc.get_int("oracle", "samples", 11);
    cfg.oracle.fine_dt = doc.get_double("oracle", "fine_dt", 0.0);

    doc.check_all_used();
    return cfg;
}

/// Resolves a config argument: a path, or the name of a bundled scenario.
inline std::string resolve_config_path(const std::string& arg) {
    namespace fs = std::filesystem;
    if (fs::exists(arg)) return arg;
#ifdef PORECAT_SCENARIO_DIR
    for (const auto& cand : {std::string(PORECAT_SCENARIO_DIR) + "/" + arg,
                                   std::string(PORECAT_SCENARIO_DIR) + "/" + arg + ".ini"})
        if (fs::exists(cand)) return cand;
#endif
    throw ConfigError("config '" + arg + "' not found (as a path or a bundled scenario name)");
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    IniDocument doc = IniDocument::load(resolve_config_path(path));
    for (const auto& o : overrides) doc.apply_override(o);
    return config_from_ini(doc);
}

inline Discretization make_discretization(const RunConfig& cfg) {
    double d_min = std::numeric_limits<double>::infinity();
    for (double d : cfg.chemistry.species.d) d_min = std::min(d_min, d);
    return Discretization(build_mesh(cfg.geometry), cfg.velocity, cfg.advection, cfg.trace_order, d_min);
}

} // namespace porecat
