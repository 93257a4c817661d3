#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "capmass/report.hpp"
#include "json.hpp"

using namespace capmass;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const MassReport& sample_report() {
  static const MassReport rep = [] {
    ExhaustionSpec spec;
    spec.base = Region::ball({}, 1.0);
    spec.rho0 = 20.0;
    spec.count = 3;
    ReportOptions opt;
    opt.deficit.asymmetry = false;
    return build_mass_report(MetricModel::schwarzschild(1.0), spec, opt);
  }();
  return rep;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("capmass_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Format, Numbers) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(NAN), "nan");
  EXPECT_EQ(format_error(1.23e-14), "1e-14");
  EXPECT_EQ(format_error(0.0), "0");
  EXPECT_EQ(format_measured(11.0, 1.2e-14), "11.000000 ± 1e-14");
}

TEST(Files, CsvHeaderIsExact) {
  const fs::path d = fresh_dir("csv");
  write_report_files(sample_report(), d, "r", "metric.kind=schwarzschild\n");
  std::ifstream in(d / "r.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "j,rho,v_radius,a_radius,capacity,cap_err,cv_def_radius,cv_def_norm,iso_def,iso_def_alt,bm_bound,asymmetry");
  EXPECT_EQ(header, report_csv_header());
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 3);
  for (const char* f : {"r_errors.csv", "r.json", "r_cv_def_radius.dat", "r_cv_def_norm.dat", "r_iso_def.dat",
                        "r_iso_def_alt.dat", "r_iso_def_vs_inv_sqrt_area.dat"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  fs::remove_all(d);
}

TEST(Files, OutputIsByteIdenticalOnRerun) {
  const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
  write_report_files(sample_report(), a, "r", "x=1\n");
  write_report_files(sample_report(), b, "r", "x=1\n");
  for (const auto& e : fs::directory_iterator(a))
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Json, CarriesRecordsLimitsAndChecks) {
  const auto j = nlohmann::json::parse(report_json(sample_report(), "a=1\n"));
  ASSERT_TRUE(j.contains("records"));
  EXPECT_EQ(j["records"].size(), 3u);
  ASSERT_TRUE(j.contains("limits"));
  EXPECT_TRUE(j["limits"].contains("cv_def_radius"));
  EXPECT_TRUE(j.contains("checks"));
  EXPECT_TRUE(j.contains("config"));
}

TEST(RunDirs, AllocateSequentiallyAndAppendManifest) {
  const fs::path d = fresh_dir("runs");
  const fs::path r1 = allocate_run_dir(d), r2 = allocate_run_dir(d);
  EXPECT_EQ(r1.filename(), "run-001");
  EXPECT_EQ(r2.filename(), "run-002");
  append_manifest(d, r1, "capacity", 0x1234, 0);
  append_manifest(d, r2, "deficit", 0x1234, 2);
  std::ifstream in(d / "manifest.txt");
  int lines = 0;
  for (std::string line; std::getline(in, line);) {
    ++lines;
    EXPECT_NE(line.find(lines == 1 ? "run-001" : "run-002"), std::string::npos) << line;
  }
  EXPECT_EQ(lines, 2);
  fs::remove_all(d);
}
