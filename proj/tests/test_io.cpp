#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "lamvs/config.hpp"
#include "lamvs/io.hpp"

using namespace lamvs;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("pfm: bit-exact round trip, header layout, bottom-to-top rows") {
  ImageF img(2, 3);
  img << 1.0f, -2.5f, 3.25e-7f, 1e20f, 0.0f, -0.0f;
  const std::string path = temp_path("lamvs_test.pfm");
  write_pfm(path, img);

  const ImageF back = read_pfm(path);
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  CHECK(std::memcmp(back.data(), img.data(), 6 * sizeof(float)) == 0);

  const std::string raw = slurp(path);
  const std::string header = "Pf\n3 2\n-1.0\n";
  REQUIRE(raw.size() == header.size() + 6 * sizeof(float));
  CHECK(raw.compare(0, header.size(), header) == 0);
  // first stored row is the bottom image row
  float first_row[3];
  std::memcpy(first_row, raw.data() + header.size(), sizeof(first_row));
  CHECK(first_row[0] == 1e20f);
  CHECK(first_row[1] == 0.0f);
  std::remove(path.c_str());

  CHECK_THROWS_AS(read_pfm(temp_path("lamvs_missing.pfm")), std::runtime_error);
  const std::string bad = temp_path("lamvs_bad.pfm");
  {
    std::ofstream out(bad, std::ios::binary);
    out << "P5\n3 2\n-1.0\n";
  }
  CHECK_THROWS_AS(read_pfm(bad), std::runtime_error);
  {
    std::ofstream out(bad, std::ios::binary);
    out << "Pf\n3 2\n1.0\n";  // big-endian scale
  }
  CHECK_THROWS_AS(read_pfm(bad), std::runtime_error);
  {
    std::ofstream out(bad, std::ios::binary);
    out << "Pf\n3 2\n-1.0\nxy";  // truncated payload
  }
  CHECK_THROWS_AS(read_pfm(bad), std::runtime_error);
  std::remove(bad.c_str());
}

TEST_CASE("pgm: quantized round trip with clamping") {
  ImageF img(2, 2);
  img << 0.0f, 1.0f, 0.5f, 2.0f;  // 2.0 clamps to 1.0
  const std::string path = temp_path("lamvs_test.pgm");
  write_pgm(path, img);

  const std::string raw = slurp(path);
  const std::string header = "P5\n2 2\n255\n";
  REQUIRE(raw.size() == header.size() + 4);
  CHECK(raw.compare(0, header.size(), header) == 0);
  CHECK(uint8_t(raw[header.size() + 0]) == 0);
  CHECK(uint8_t(raw[header.size() + 1]) == 255);
  CHECK(uint8_t(raw[header.size() + 2]) == 128);
  CHECK(uint8_t(raw[header.size() + 3]) == 255);

  const ImageF back = read_pgm(path);
  CHECK(back(0, 0) == 0.0f);
  CHECK(back(0, 1) == 1.0f);
  CHECK(back(1, 0) == doctest::Approx(128.0 / 255.0));
  CHECK(back(1, 1) == 1.0f);
  std::remove(path.c_str());

  CHECK_THROWS_AS(read_pgm(temp_path("lamvs_missing.pgm")), std::runtime_error);
}

TEST_CASE("ppm: interleaved binary channels") {
  ImageF r = ImageF::Constant(1, 2, 1.0f);
  ImageF g = ImageF::Constant(1, 2, 0.0f);
  ImageF b(1, 2);
  b << 0.5f, -1.0f;  // negative clamps to 0
  const std::string path = temp_path("lamvs_test.ppm");
  write_ppm(path, r, g, b);

  const std::string raw = slurp(path);
  const std::string header = "P6\n2 1\n255\n";
  REQUIRE(raw.size() == header.size() + 6);
  CHECK(raw.compare(0, header.size(), header) == 0);
  const uint8_t* px = reinterpret_cast<const uint8_t*>(raw.data() + header.size());
  CHECK(px[0] == 255);
  CHECK(px[1] == 0);
  CHECK(px[2] == 128);
  CHECK(px[3] == 255);
  CHECK(px[4] == 0);
  CHECK(px[5] == 0);
  std::remove(path.c_str());
}

TEST_CASE("ply: binary little-endian layout and both-format round trips") {
  FusedCloud cloud;
  std::mt19937 gen(73);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 17; ++i) {
    CloudPoint p;
    p.position = Vec3(u(gen), u(gen), u(gen));
    p.r = uint8_t(gen() % 256);
    p.g = uint8_t(gen() % 256);
    p.b = uint8_t(gen() % 256);
    p.support = 1 + int(gen() % 4);
    cloud.points.push_back(p);
  }

  const std::string path = temp_path("lamvs_test.ply");
  write_ply(path, cloud);
  const std::string raw = slurp(path);
  const size_t header_end = raw.find("end_header\n") + 11;
  REQUIRE(header_end != std::string::npos + 11);
  CHECK(raw.compare(0, 4, "ply\n") == 0);
  CHECK(raw.find("format binary_little_endian 1.0\n") != std::string::npos);
  CHECK(raw.find("element vertex 17\n") != std::string::npos);
  // 12 bytes float xyz + 3 bytes color per point
  CHECK(raw.size() == header_end + 17 * 15);
  float xyz[3];
  std::memcpy(xyz, raw.data() + header_end, sizeof(xyz));
  CHECK(xyz[0] == float(cloud.points[0].position.x()));
  CHECK(xyz[2] == float(cloud.points[0].position.z()));
  CHECK(uint8_t(raw[header_end + 12]) == cloud.points[0].r);

  const FusedCloud back = read_ply(path);
  REQUIRE(back.points.size() == cloud.points.size());
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    CHECK(float(back.points[i].position.x()) == float(cloud.points[i].position.x()));
    CHECK(float(back.points[i].position.y()) == float(cloud.points[i].position.y()));
    CHECK(float(back.points[i].position.z()) == float(cloud.points[i].position.z()));
    CHECK(back.points[i].r == cloud.points[i].r);
    CHECK(back.points[i].g == cloud.points[i].g);
    CHECK(back.points[i].b == cloud.points[i].b);
  }

  write_ply(path, cloud, /*ascii=*/true);
  CHECK(slurp(path).find("format ascii 1.0\n") != std::string::npos);
  const FusedCloud back_ascii = read_ply(path);
  REQUIRE(back_ascii.points.size() == cloud.points.size());
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    CHECK(float(back_ascii.points[i].position.x()) ==
          doctest::Approx(float(cloud.points[i].position.x())).epsilon(1e-5));
    CHECK(back_ascii.points[i].b == cloud.points[i].b);
  }
  std::remove(path.c_str());

  const std::string bad = temp_path("lamvs_bad.ply");
  {
    std::ofstream out(bad);
    out << "obj\n";
  }
  CHECK_THROWS_AS(read_ply(bad), std::runtime_error);
  {
    std::ofstream out(bad);
    out << "ply\nformat binary_little_endian 1.0\nelement vertex 5\nend_header\nxx";
  }
  CHECK_THROWS_AS(read_ply(bad), std::runtime_error);
  std::remove(bad.c_str());
}

TEST_CASE("volume dump: header, payload size, empty input error") {
  Volume v(2, 3, 4);
  for (size_t i = 0; i < v.values.size(); ++i) {
    v.values[i] = float(i);
    v.valid[i] = i % 2;
  }
  const std::string path = temp_path("lamvs_test.vol");
  write_volume_dump(path, {v, v}, {1, 0});

  const std::string raw = slurp(path);
  const std::string header = "lamvs_volume 1\n2 3 4 2\n1 0\n";
  REQUIRE(raw.size() == header.size() + 2 * (24 * sizeof(float) + 24));
  CHECK(raw.compare(0, header.size(), header) == 0);
  float first;
  std::memcpy(&first, raw.data() + header.size(), sizeof(float));
  CHECK(first == 0.0f);
  std::remove(path.c_str());

  CHECK_THROWS_AS(write_volume_dump(path, {}, {}), std::invalid_argument);
}

TEST_CASE("config file: full round trip of every field") {
  RunConfig cfg;
  cfg.cascade.stages = {{0.25, 40, 3.0}, {0.5, 20, 1.5}, {1.0, 10, 0.75}};
  cfg.cascade.aggregation = parse_strategy("late_preserved", "entropy_weighted");
  cfg.cascade.shuffle_seed = 12345;
  cfg.cascade.view_count = 7;
  cfg.cascade.softmax_sharpness = 123.5;
  cfg.filter.conf_threshold = 0.45;
  cfg.filter.reproj_px_threshold = 1.25;
  cfg.filter.abs_depth_threshold = 0.375;
  cfg.filter.dyn_view_weights = {0.9, 0.4, 0.2, 0.05};
  cfg.filter.dyn_score_threshold = 1.1;
  cfg.filter.criterion = FilterConfig::DepthCriterion::relative;
  cfg.filter.rel_depth_threshold = 2e-3;
  cfg.threads = 4;

  const std::string path = temp_path("lamvs_test.cfg");
  write_config_file(path, cfg);
  const RunConfig back = read_config_file(path);

  REQUIRE(back.cascade.stages.size() == 3);
  for (int s = 0; s < 3; ++s) {
    CHECK(back.cascade.stages[s].scale == cfg.cascade.stages[s].scale);
    CHECK(back.cascade.stages[s].hypothesis_count ==
          cfg.cascade.stages[s].hypothesis_count);
    CHECK(back.cascade.stages[s].interval == cfg.cascade.stages[s].interval);
  }
  CHECK(to_string(back.cascade.aggregation) == "late_preserved/entropy_weighted");
  REQUIRE(back.cascade.shuffle_seed.has_value());
  CHECK(*back.cascade.shuffle_seed == 12345);
  CHECK(back.cascade.view_count == 7);
  CHECK(back.cascade.softmax_sharpness == 123.5);
  CHECK(back.filter.conf_threshold == 0.45);
  CHECK(back.filter.reproj_px_threshold == 1.25);
  CHECK(back.filter.abs_depth_threshold == 0.375);
  for (int i = 0; i < 4; ++i)
    CHECK(back.filter.dyn_view_weights[i] == cfg.filter.dyn_view_weights[i]);
  CHECK(back.filter.dyn_score_threshold == 1.1);
  CHECK(back.filter.criterion == FilterConfig::DepthCriterion::relative);
  CHECK(back.filter.rel_depth_threshold == 2e-3);
  CHECK(back.threads == 4);
  std::remove(path.c_str());

  // default config also survives, including the absent shuffle seed
  RunConfig def;
  write_config_file(path, def);
  const RunConfig back_def = read_config_file(path);
  CHECK(!back_def.cascade.shuffle_seed.has_value());
  CHECK(back_def.cascade.softmax_sharpness == def.cascade.softmax_sharpness);
  CHECK(back_def.filter.criterion == FilterConfig::DepthCriterion::absolute);
  std::remove(path.c_str());

  const std::string bad = temp_path("lamvs_bad.cfg");
  {
    std::ofstream out(bad);
    out << "lamvs_config 2\n";
  }
  CHECK_THROWS_AS(read_config_file(bad), std::runtime_error);
  {
    std::ofstream out(bad);
    out << "lamvs_config 1\nmystery 7\n";
  }
  CHECK_THROWS_AS(read_config_file(bad), std::runtime_error);
  std::remove(bad.c_str());
}

TEST_CASE("manifest: config echo plus ordered extra entries") {
  RunConfig cfg;
  const std::string path = temp_path("lamvs_test.manifest");
  write_manifest(path, cfg, {{"scene_seed", "42"}, {"plan", "none"}});
  const std::string raw = slurp(path);
  CHECK(raw.rfind("lamvs_manifest 1\n", 0) == 0);
  CHECK(raw.find("strategy late_preserved/best_peak\n") != std::string::npos);
  CHECK(raw.find("softmax_sharpness 200\n") != std::string::npos);
  CHECK(raw.find("confidence_definition sum_4_bins_around_argmax\n") !=
        std::string::npos);
  const size_t seed_pos = raw.find("scene_seed 42\n");
  const size_t plan_pos = raw.find("plan none\n");
  REQUIRE(seed_pos != std::string::npos);
  REQUIRE(plan_pos != std::string::npos);
  CHECK(seed_pos < plan_pos);
  std::remove(path.c_str());
}
