#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "planckwave/io.hpp"

using namespace planckwave;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("planckwave-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST(Csv, QuotingAndLineEndings) {
  Table t;
  t.header = {"name", "value"};
  t.add({std::string("plain"), 1.5});
  t.add({std::string("a,b"), std::int64_t{-3}});
  t.add({std::string("say \"hi\""), std::uint64_t{18446744073709551615ull}});
  t.add({std::string("two\nlines"), 0.0});
  EXPECT_EQ(t.to_csv(),
            "name,value\r\n"
            "plain,1.5\r\n"
            "\"a,b\",-3\r\n"
            "\"say \"\"hi\"\"\",18446744073709551615\r\n"
            "\"two\nlines\",0\r\n");
}

TEST(Csv, RowWidthMustMatchHeader) {
  Table t;
  t.header = {"a", "b"};
  EXPECT_THROW(t.add({1.0}), ConfigError);
}

TEST(Csv, ShortestRoundTripDoubles) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  EXPECT_EQ(format_double(2.0), "2");
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -4.9e-324}) EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
}

TEST(Hash, GitBlobHash) {
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(sha1_hex("abc"), "a9993e364706816aba3e25717850c26c9cd0d89d");
}

TEST(Output, RefusesOverwriteWithoutForce) {
  const auto dir = scratch_dir("overwrite");
  {
    OutputDirectory out(dir, false);
    out.write("a.txt", "first");
  }
  OutputDirectory again(dir, false);
  try {
    again.write("a.txt", "second");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("--force"), std::string::npos);
  }
  EXPECT_EQ(slurp(dir / "a.txt"), "first");
  OutputDirectory forced(dir, true);
  forced.write("a.txt", "second");
  EXPECT_EQ(slurp(dir / "a.txt"), "second");
  std::filesystem::remove_all(dir);
}

TEST(Output, ManifestHasSortedKeysAndHashes) {
  const auto dir = scratch_dir("manifest");
  OutputDirectory out(dir, false);
  Table t;
  t.header = {"x"};
  t.add({1.0});
  out.write_csv("z.csv", t);
  out.write_json("a.json", Json{{"b", 1}, {"a", 2}});
  out.write_manifest("test", "[model]\nh = 0.1\n", 0.25, Json{{"seed", 7}});
  const auto text = slurp(dir / "manifest.json");
  const auto m = Json::parse(text);
  EXPECT_EQ(m["files"]["z.csv"]["sha1"], git_blob_hash("x\r\n1\r\n"));
  EXPECT_EQ(m["config_hash"], git_blob_hash("[model]\nh = 0.1\n"));
  EXPECT_EQ(m["seed"], 7);
  // keys appear in lexicographic order in the serialized text
  const auto pos = [&](const std::string& k) { return text.find("\"" + k + "\""); };
  EXPECT_LT(pos("command"), pos("config_hash"));
  EXPECT_LT(pos("config_hash"), pos("files"));
  EXPECT_LT(pos("files"), pos("generator"));
  EXPECT_LT(pos("seed"), pos("wall_time_seconds"));
  EXPECT_LT(slurp(dir / "a.json").find("\"a\""), slurp(dir / "a.json").find("\"b\""));
  std::filesystem::remove_all(dir);
}

TEST(Output, LatticeTableShape) {
  ModelParams p;
  p.h = 1.0 / 8;
  const auto lat = build_lattice(p);
  const auto t = lattice_table(lat);
  EXPECT_EQ(t.header, (std::vector<std::string>{"index", "xi_1", "xi_2", "radius"}));
  EXPECT_EQ(t.rows.size(), static_cast<std::size_t>(lat.size()));
  const auto meta = lattice_metadata(lat);
  EXPECT_EQ(meta["N"], lat.size());
}
