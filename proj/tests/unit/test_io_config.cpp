#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "pnpup/config.hpp"
#include "pnpup/error.hpp"
#include "pnpup/io.hpp"

using namespace pnpup;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pnpup_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> violations_of(std::string_view text) {
  try {
    parse_config(text, {}, "t.ini");
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("fnv1a reference digests") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
  CHECK(hash_hex(0xabcull) == "0000000000000abc");
}

TEST_CASE("format_double round trips") {
  for (double x : {0.0, 1.0, -2.5, 0.1, 1e-300, 3.141592653589793, 6.02e23}) {
    const auto s = format_double(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(format_double(0.25) == "0.25");
}

TEST_CASE("atomic writes leave no temporary behind") {
  const auto dir = scratch_dir("atomic");
  const auto p = dir / "nested" / "a.txt";
  atomic_write(p, "first");
  atomic_write(p, "second");
  CHECK(read_text(p) == "second");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(p.parent_path())) ++n;
  CHECK(n == 1);
  CHECK_THROWS_AS(read_text(dir / "absent.txt"), InputError);
}

TEST_CASE("grid dump round trip") {
  const auto dir = scratch_dir("dump");
  Grid g(2, 6);
  ScalarField f(g, testing::random_vector(g.size(), 17, -1e3, 1e3));
  f.values[3] = 1.0 / 3.0;
  write_grid_dump(dir / "f.txt", "phi", f);
  const auto back = read_grid_dump(dir / "f.txt");
  CHECK(back.name == "phi");
  CHECK(back.field.grid.dim() == 2);
  CHECK(back.field.grid.n() == 6);
  CHECK(back.field.values == f.values);
  CHECK(read_text(dir / "f.txt").rfind("field phi 2 6\n", 0) == 0);

  atomic_write(dir / "short.txt", "field x 2 4\n1\n2\n");
  CHECK_THROWS_AS(read_grid_dump(dir / "short.txt"), InputError);
}

TEST_CASE("tensor JSON round trip") {
  EffectiveTensors t;
  t.dim = 2;
  t.porosity = 0.8036;
  t.eps0 = Eigen::MatrixXd{{1.25, 0.1}, {0.1, 2.0 / 3.0}};
  t.M = Eigen::MatrixXd{{0.7, 0.0}, {0.0, 0.7}};
  t.Hhat = Eigen::MatrixXd{{-0.1036, 0.0}, {0.0, -0.1036}};
  t.provenance = {0x1234abcdull, "disc", 32, 1e-10, 1.0, 4.0};
  const auto text = tensors_to_json(t, "00ff");
  CHECK(text.find("\"config_hash\"") != std::string::npos);
  const auto back = tensors_from_json(text);
  CHECK(back.dim == 2);
  CHECK(back.porosity == t.porosity);
  CHECK(back.eps0 == t.eps0);
  CHECK(back.M == t.M);
  CHECK(back.Hhat == t.Hhat);
  CHECK(back.provenance.geometry_hash == t.provenance.geometry_hash);
  CHECK(back.provenance.cell_kind == "disc");
  CHECK(back.provenance.resolution == 32);
  CHECK(back.provenance.alpha == 4.0);
  CHECK_THROWS_AS(tensors_from_json("{\"dim\": 2}"), InputError);
  CHECK_THROWS_AS(tensors_from_json("not json"), InputError);
}

TEST_CASE("csv layouts") {
  DiagnosticsRow r;
  r.t = 0.5;
  r.mass1 = 1;
  r.mass2 = 2;
  r.picard_iters = 3;
  const auto csv = format_diagnostics_csv({r});
  CHECK(csv.rfind(std::string(kDiagnosticsHeader) + "\n", 0) == 0);
  CHECK(csv.find("\n0.5,1,2,0,0,3,0\n") != std::string::npos);
  const auto v = format_validation_csv({{0.25, 0.1, 0.2, 0.3, 0.4}});
  CHECK(v == std::string(kValidationHeader) + "\n0.25,0.1,0.2,0.3,0.4\n");
}

TEST_CASE("minimal config takes defaults") {
  const auto cfg = parse_config("[cell]\nkind = disc\n");
  CHECK(cfg.geometry.kind == CellKind::Disc);
  CHECK(cfg.cell_resolution == 32);
  CHECK(cfg.physics.lambda == 1.0);
  CHECK(cfg.macro.resolution == 64);
  CHECK(cfg.macro.dt == 1e-3);
  CHECK(cfg.micro.dt == cfg.macro.dt);
  CHECK(cfg.micro.T == cfg.macro.T);
  CHECK(cfg.micro_s == std::vector<double>{0.5, 0.25});
  CHECK(cfg.macro.lambda2 == 1.0);
  CHECK(cfg.canonical.find("cell.kind=disc\n") != std::string::npos);
  CHECK(cfg.hash == hash_hex(fnv1a(cfg.canonical)));
}

TEST_CASE("config syntax") {
  const auto cfg = parse_config(
      "# comment\n"
      "physics.lambda = 0.5   ; trailing\n"
      "[cell]\n"
      "kind = \"laminate\"\n"
      "cell.fraction = 0.25\n"
      "[macro]\n"
      "bc = neumann\n");
  CHECK(cfg.geometry.kind == CellKind::Laminate);
  CHECK(cfg.geometry.fraction == 0.25);
  CHECK(cfg.physics.lambda == 0.5);
  CHECK(cfg.macro.lambda2 == 0.25);
  CHECK(cfg.macro.bc == MacroBoundary::Neumann);
  CHECK(cfg.micro.bc == MacroBoundary::Neumann);
}

TEST_CASE("config violations are all reported") {
  SUBCASE("negative lambda names the key") {
    const auto v = violations_of("[cell]\nkind = full\n[physics]\nlambda = -1\n");
    REQUIRE(v.size() == 1);
    CHECK(v[0].rfind("t.ini:4:", 0) == 0);
    CHECK(v[0].find("physics.lambda") != std::string::npos);
  }
  SUBCASE("duplicate key cites both lines") {
    const auto v = violations_of("[cell]\nkind = full\nkind = disc\n");
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("line 2") != std::string::npos);
    CHECK(v[0].find("line 3") != std::string::npos);
  }
  SUBCASE("several problems at once, sorted by line") {
    const auto v = violations_of(read_text(PNPUP_TEST_DATA_DIR "/invalid.ini"));
    CHECK(v.size() >= 5);
    CHECK(any_contains(v, "cell.kind"));
    CHECK(any_contains(v, "cell.resolution"));
    CHECK(any_contains(v, "duplicate key 'physics.lambda'"));
    CHECK(any_contains(v, "unknown key 'physics.bogus'"));
    for (std::size_t i = 1; i < v.size(); ++i) {
      auto line = [](const std::string& s) { return std::stoi(s.substr(s.find(':') + 1)); };
      CHECK(line(v[i - 1]) <= line(v[i]));
    }
  }
  SUBCASE("missing required key") {
    const auto v = violations_of("[physics]\nlambda = 1\n");
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("missing required key 'cell.kind'") != std::string::npos);
  }
  SUBCASE("cross-field checks") {
    CHECK(any_contains(violations_of("[cell]\nkind = mask\n"), "requires cell.mask_path"));
    CHECK(any_contains(violations_of("[cell]\nkind = laminate\naxis = 2\n"), "cell.axis must be < cell.dim"));
    CHECK(any_contains(violations_of("[cell]\nkind = full\n[output]\nsnapshot_times = 1\n"), "exceeds macro.T"));
    CHECK(any_contains(violations_of("[cell]\nkind = full\n[micro]\ns = 1/3.5\n"), "micro.s"));
    CHECK(any_contains(violations_of("[cell]\nkind = full\nlambda = 1\n"), "unknown key 'cell.lambda'"));
    CHECK(any_contains(violations_of("kind = full\n"), "outside a section"));
    CHECK(any_contains(violations_of("[cell]\nkind = full\n[macro]\ndt = 1\nT = 0.5\n"), "macro.dt must not exceed macro.T"));
  }
}

TEST_CASE("config files and mask paths") {
  const auto cfg = load_config(PNPUP_TEST_DATA_DIR "/mask.ini");
  CHECK(cfg.geometry.kind == CellKind::Mask);
  CHECK(fs::exists(cfg.geometry.mask_path));
  CHECK(cfg.source == fs::path(PNPUP_TEST_DATA_DIR "/mask.ini"));
  CHECK_THROWS_AS(load_config(PNPUP_TEST_DATA_DIR "/absent.ini"), ConfigError);
  CHECK_THROWS_AS(load_config(PNPUP_TEST_DATA_DIR "/missing_kind.ini"), ConfigError);
}

TEST_CASE("config hash") {
  const auto a = parse_config("[cell]\nkind = disc\n");
  const auto b = parse_config("# different layout\ncell.kind=disc\n[physics]\nlambda = 1.0\n");
  const auto c = parse_config("[cell]\nkind = disc\n[physics]\nlambda = 1.5\n");
  CHECK(a.hash == b.hash);
  CHECK(a.canonical == b.canonical);
  CHECK(a.hash != c.hash);
  CHECK(a.hash.size() == 16);
}

TEST_CASE("scale ratios") {
  CHECK(parse_scale_ratio("1/2") == 0.5);
  CHECK(parse_scale_ratio(" 1/8 ") == 0.125);
  CHECK(parse_scale_ratio("0.25") == 0.25);
  CHECK(parse_scale_ratio("1") == 1.0);
  CHECK_THROWS_AS(parse_scale_ratio("1/3.5"), InputError);
  CHECK_THROWS_AS(parse_scale_ratio("0.3"), InputError);
  CHECK_THROWS_AS(parse_scale_ratio("2"), InputError);
  CHECK_THROWS_AS(parse_scale_ratio("x"), InputError);
  CHECK_THROWS_AS(parse_scale_ratio("0"), InputError);
}
