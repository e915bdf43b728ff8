#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "porecat/cli.hpp"

using namespace porecat;
namespace fs = std::filesystem;

namespace {

const char* minimal = R"(schema_version = 1
[geometry]
R = 1
h = 1
n_r = 2
n_phi = 3
n_z = 4
[species]
names = A
d = 1
d_surface = 1
[sorption.A]
law = henry
k_ad = 1
k_de = 1
[scenario]
t_end = 0.1
closed_pore = true
[initial.A]
bulk_kind = axial_cosine
bulk_mean = 1
bulk_amplitude = 0.5
surface_mean = 0.25
[scheme]
dt = 0.01
[output]
prefix = mini
formats = csv, vtk, json, ledger
)";

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("porecat_test_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto at = s.find(from);
    EXPECT_NE(at, std::string::npos) << from;
    if (at != std::string::npos) s.replace(at, from.size(), to);
    return s;
}

struct CliResult {
    int code;
    std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "porecat");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string config_error(const std::string& text) {
    try {
        config_from_ini(IniDocument::parse(text, "test.ini"));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST(Ini, CommentsSectionsAndDuplicates) {
    const auto doc = IniDocument::parse("a = 1 # note\n; whole line\n[s]\nq = 1 0; 0 1\n", "x");
    EXPECT_EQ(*doc.get_string("", "a"), "1");
    EXPECT_EQ(*doc.get_string("s", "q"), "1 0; 0 1");
    EXPECT_THROW(IniDocument::parse("[s]\nk = 1\nk = 2\n", "x"), ConfigError);
    EXPECT_THROW(IniDocument::parse("[s\n", "x"), ConfigError);
    EXPECT_THROW(IniDocument::parse("novalue\n", "x"), ConfigError);
}

TEST(Config, MinimalParses) {
    const auto cfg = config_from_ini(IniDocument::parse(minimal, "mini.ini"));
    EXPECT_EQ(cfg.chemistry.species.names, std::vector<std::string>{"A"});
    EXPECT_EQ(cfg.chemistry.sorption[0].kind_name(), "henry");
    EXPECT_TRUE(cfg.scenario.closed_pore);
    EXPECT_EQ(cfg.scheme.kind, SchemeKind::imex_euler);
    EXPECT_EQ(cfg.geometry.n_phi, 3);
}

TEST(Config, UndeclaredSpeciesIsNamed) {
    const std::string text = std::string(minimal) + "[sorption.X]\nlaw = henry\nk_ad = 1\nk_de = 1\n";
    const auto msg = config_error(text);
    EXPECT_NE(msg.find("'X'"), std::string::npos) << msg;
}

TEST(Config, NegativeDiffusivityCitesPositivity) {
    const auto msg = config_error(replace(minimal, "d = 1\n", "d = -1\n"));
    EXPECT_NE(msg.find("must be > 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("diffusivity"), std::string::npos) << msg;
}

TEST(Config, RejectsUnknownKeysSectionsAndVersions) {
    EXPECT_NE(config_error(std::string(minimal) + "[scheme]\ndt = 0.5\n").find("duplicate"), std::string::npos);
    EXPECT_NE(config_error(replace(minimal, "dt = 0.01", "dt = 0.01\nbogus = 3")).find("unknown key 'bogus'"),
              std::string::npos);
    EXPECT_NE(config_error(std::string(minimal) + "[extra]\nk = 1\n").find("unknown section"), std::string::npos);
    EXPECT_NE(config_error(replace(minimal, "schema_version = 1", "schema_version = 2")).find("schema_version"),
              std::string::npos);
    EXPECT_NE(config_error(replace(minimal, "dt = 0.01", "dt = fast")).find("expected a number"), std::string::npos);
}

TEST(Config, OverridesApply) {
    TempDir tmp;
    const auto p = write_file(tmp.path / "mini.ini", minimal);
    const auto cfg = load_config(p.string(), {"scheme.dt=0.02", "geometry.n_z=6"});
    EXPECT_EQ(cfg.scheme.dt, 0.02);
    EXPECT_EQ(cfg.geometry.n_z, 6);
    EXPECT_THROW(load_config(p.string(), {"nodot=1"}), ConfigError);
}

TEST(Config, BundledScenariosLoad) {
    for (const auto& e : fs::directory_iterator(PORECAT_SCENARIO_DIR)) {
        if (e.path().extension() != ".ini") continue;
        EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
    }
}

TEST(Cli, ValidateR1ModifiedLangmuirPasses) {
    const auto r = cli({"-c", "r1_modified_langmuir", "-m", "validate"});
    EXPECT_EQ(r.code, exit_ok) << r.out << r.err;
}

TEST(Cli, ValidateRawLangmuirFails) {
    const auto r = cli({"-c", "raw_langmuir_validate", "-m", "validate"});
    EXPECT_EQ(r.code, exit_validation) << r.out << r.err;
    EXPECT_NE(r.out.find("A_sorp_M"), std::string::npos);
    EXPECT_NE(r.out.find("A_sorp_B"), std::string::npos);
}

TEST(Cli, StableDtViolationExitsWithBound) {
    TempDir tmp;
    const auto r = cli({"-c", "stable_dt_violation", "-o", tmp.path.string()});
    EXPECT_EQ(r.code, exit_config);
    EXPECT_NE(r.err.find("stable"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("0.00829"), std::string::npos) << r.err;
}

TEST(Cli, RunRefusesFailedValidationWithoutForce) {
    TempDir tmp;
    const std::string text = replace(replace(minimal, "law = henry\nk_ad = 1\nk_de = 1",
                                             "law = langmuir\nk_ad = 1\nk_de = 1\nc_inf = 1"),
                                     "formats = csv, vtk, json, ledger", "formats = json");
    const auto p = write_file(tmp.path / "raw.ini", text);
    EXPECT_EQ(cli({"-c", p.string(), "-o", tmp.path.string()}).code, exit_validation);
    EXPECT_EQ(cli({"-c", p.string(), "-o", tmp.path.string(), "--force"}).code, exit_ok);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(cli({}).code, exit_config);
    EXPECT_EQ(cli({"-c", "does_not_exist.ini"}).code, exit_config);
    EXPECT_EQ(cli({"-c", "henry_closed", "-m", "bogus"}).code, exit_config);
    EXPECT_EQ(cli({"-c", "henry_closed", "-m", "oracle"}).code, exit_config);
}

TEST(Snapshot, CsvRoundTripIsBitIdentical) {
    TempDir tmp;
    CylinderSpec cs;
    cs.n_r = 3;
    cs.n_phi = 4;
    cs.n_z = 5;
    Discretization d(build_mesh(cs), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    BulkState c{Vector(d.n_cells()), Vector(d.n_cells())};
    SurfaceState s{Vector(d.n_patches()), Vector(d.n_patches())};
    for (auto& v : c)
        for (auto& x : v) x = u(rng) * std::pow(10.0, std::uniform_int_distribution<int>(-200, 200)(rng));
    for (auto& v : s)
        for (auto& x : v) x = u(rng) / 3.0;
    write_bulk_csv(tmp.path / "b.csv", d, {"A", "B"}, c);
    write_surface_csv(tmp.path / "s.csv", d, {"A", "B"}, s);
    const auto tb = read_csv(tmp.path / "b.csv");
    ASSERT_EQ(tb.rows.size(), static_cast<std::size_t>(d.n_cells()));
    const int a = tb.column("A"), b = tb.column("B");
    for (std::size_t k = 0; k < tb.rows.size(); ++k) {
        const int cell = static_cast<int>(tb.rows[k][0]);
        EXPECT_EQ(tb.rows[k][a], c[0][cell]);
        EXPECT_EQ(tb.rows[k][b], c[1][cell]);
    }
    const auto ts = read_csv(tmp.path / "s.csv");
    ASSERT_EQ(ts.rows.size(), static_cast<std::size_t>(d.n_patches()));
    for (const auto& row : ts.rows) EXPECT_EQ(row[ts.column("B")], s[1][static_cast<int>(row[0])]);
}

TEST(Snapshot, ZeroStateRowsAndVtkCounts) {
    TempDir tmp;
    CylinderSpec cs;
    cs.n_r = 2;
    cs.n_phi = 5;
    cs.n_z = 3;
    Discretization d(build_mesh(cs), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    BulkState c{Vector::Zero(d.n_cells())};
    SurfaceState s{Vector::Zero(d.n_patches())};
    write_bulk_csv(tmp.path / "b.csv", d, {"A"}, c);
    const auto t = read_csv(tmp.path / "b.csv");
    EXPECT_EQ(t.header, (std::vector<std::string>{"cell", "i", "j", "k", "r", "phi", "z", "A"}));
    ASSERT_EQ(t.rows.size(), 30u);
    for (const auto& row : t.rows) EXPECT_EQ(row.back(), 0.0);

    write_bulk_vtk(tmp.path / "b.vtk", d, {"A"}, c);
    write_surface_vtk(tmp.path / "s.vtk", d, {"A"}, s);
    const std::string vb = slurp(tmp.path / "b.vtk"), vs = slurp(tmp.path / "s.vtk");
    EXPECT_NE(vb.find("DIMENSIONS 3 6 4"), std::string::npos);
    EXPECT_NE(vb.find("POINTS 72 double"), std::string::npos);
    EXPECT_NE(vb.find("CELL_DATA 30"), std::string::npos);
    EXPECT_NE(vs.find("POINTS 24 double"), std::string::npos);
    EXPECT_NE(vs.find("POLYGONS 15 75"), std::string::npos);
    EXPECT_NE(vs.find("CELL_DATA 15"), std::string::npos);
}

TEST(Snapshot, ReadCsvReportsBadLines) {
    TempDir tmp;
    write_file(tmp.path / "bad.csv", "a,b\n1,2\n3\n");
    try {
        read_csv(tmp.path / "bad.csv");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
}

TEST(Cli, RunIsDeterministicAndWritesOutputs) {
    TempDir a, b;
    const auto cfgpath = write_file(a.path / "mini.ini", minimal);
    const auto ra = cli({"-c", cfgpath.string(), "-o", (a.path / "out").string()});
    const auto rb = cli({"-c", cfgpath.string(), "-o", (b.path / "out").string()});
    ASSERT_EQ(ra.code, exit_ok) << ra.err;
    ASSERT_EQ(rb.code, exit_ok) << rb.err;
    EXPECT_EQ(ra.out, rb.out);
    std::set<std::string> files;
    for (const auto& e : fs::directory_iterator(a.path / "out")) files.insert(e.path().filename().string());
    for (const char* f : {"mini_bulk_00000000.csv", "mini_surface_00000000.csv", "mini_bulk_00000010.vtk",
                          "mini_surface_00000010.csv", "mini_summary.json", "mini_ledger.csv"})
        EXPECT_TRUE(files.count(f)) << f;
    for (const auto& f : files) EXPECT_EQ(slurp(a.path / "out" / f), slurp(b.path / "out" / f)) << f;

    const Json j = read_json(a.path / "out" / "mini_summary.json");
    std::set<std::string> keys;
    for (const auto& [k, _] : j.items()) keys.insert(k);
    EXPECT_EQ(keys, (std::set<std::string>{"species", "min_bulk", "min_surface", "ledger_max_residual", "gronwall",
                                           "comparisons", "validators"}));
    EXPECT_GE(j["min_bulk"].get<double>(), 0.0);
    const auto ledger = read_csv(a.path / "out" / "mini_ledger.csv");
    EXPECT_EQ(ledger.rows.size(), 11u);
    EXPECT_GE(ledger.column("residual_A"), 0);
}

TEST(Cli, DumpMatrices) {
    TempDir tmp;
    const auto cfgpath = write_file(tmp.path / "mini.ini", replace(minimal, "formats = csv, vtk, json, ledger", "formats = json"));
    ASSERT_EQ(cli({"-c", cfgpath.string(), "-o", tmp.path.string(), "--dump-matrices"}).code, exit_ok);
    for (const char* f : {"bulk_laplacian.mtx", "surface_laplacian.mtx", "advection.mtx"})
        EXPECT_TRUE(fs::exists(tmp.path / f)) << f;
}

TEST(Cli, TabulatedVelocityFile) {
    TempDir tmp;
    CylinderSpec cs;
    cs.n_r = 2;
    cs.n_phi = 3;
    cs.n_z = 4;
    const auto m = build_mesh(cs);
    std::ofstream f(tmp.path / "u.csv");
    f << "face,normal_velocity\n";
    for (std::size_t k = 0; k < m.bulk.faces.size(); ++k)
        f << k << "," << (m.bulk.faces[k].axis == Axis::z ? 0.5 * m.bulk.faces[k].normal[2] : 0.0) << "\n";
    f.close();
    const auto tab = load_face_velocity(tmp.path / "u.csv", m);
    EXPECT_TRUE(validate_avel(tab, m.bulk).passed);
    write_file(tmp.path / "short.csv", "face,normal_velocity\n0,1\n");
    EXPECT_THROW(load_face_velocity(tmp.path / "short.csv", m), ConfigError);
}
