// Copyright 2026 The TransDeno Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

#include "test_util.hpp"
#include "transdeno/io/checkpoint.hpp"
#include "transdeno/io/key_value.hpp"
#include "transdeno/io/tensor_file.hpp"

namespace transdeno {
namespace {

namespace fs = std::filesystem;
using io::Bytes;
using testing::random_map;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("transdeno_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(TensorFile, ExactByteLayout) {
  io::TensorData t{{1, 2}, std::vector<float>{1.0f, -2.0f}};
  const Bytes want{'G', 'S', 'T', 'E', 'N', 'S', 'R', '1',  //
                   2, 0, 0, 0,                              // ndim
                   1, 0, 0, 0, 2, 0, 0, 0,                  // dims
                   1,                                       // f32
                   0x00, 0x00, 0x80, 0x3f,                  // 1.0f
                   0x00, 0x00, 0x00, 0xc0};                 // -2.0f
  EXPECT_EQ(io::encode_tensor(t), want);
}

TEST(TensorFile, BitExactRoundTripBothDtypes) {
  const auto f = random_map<float>({3, 5, 7}, 1);
  auto d = random_map<double>({2, 4, 4}, 2);
  d(0, 0, 0) = -0.0;
  d(1, 3, 3) = std::numeric_limits<double>::denorm_min();
  for (const auto& t : {io::to_tensor_data(f), io::to_tensor_data(d)}) {
    const auto back = io::decode_tensor(io::encode_tensor(t));
    EXPECT_EQ(back.dims, t.dims);
    EXPECT_EQ(io::encode_tensor(back), io::encode_tensor(t));
  }
  EXPECT_EQ(io::to_feature_map<float>(io::decode_tensor(io::encode_tensor(io::to_tensor_data(f)))), f);
  const auto dd = io::to_feature_map<double>(io::decode_tensor(io::encode_tensor(io::to_tensor_data(d))));
  EXPECT_TRUE(std::signbit(dd(0, 0, 0)));
  EXPECT_EQ(std::bit_cast<std::uint64_t>(dd(1, 3, 3)), std::bit_cast<std::uint64_t>(d(1, 3, 3)));
}

TEST(TensorFile, FileRoundTrip) {
  TempDir dir;
  const auto m = random_map<float>({2, 3, 3}, 3);
  io::write_tensor_file(dir.path() / "m.tensor", io::to_tensor_data(m));
  EXPECT_EQ(io::to_feature_map<float>(io::read_tensor_file(dir.path() / "m.tensor")), m);
  EXPECT_THROW(io::read_tensor_file(dir.path() / "absent.tensor"), Error);
}

TEST(TensorFile, RejectsCorruption) {
  const auto good = io::encode_tensor(io::to_tensor_data(random_map<float>({1, 4, 4}, 4)));
  for (std::size_t cut : {0ul, 5ul, 8ul, 11ul, 20ul, good.size() - 1}) {
    EXPECT_THROW(io::decode_tensor(Bytes(good.begin(), good.begin() + static_cast<long>(cut))), FormatError)
        << cut;
  }
  auto extra = good;
  extra.push_back(0);
  EXPECT_THROW(io::decode_tensor(extra), FormatError);
  auto magic = good;
  magic[0] = 'X';
  EXPECT_THROW(io::decode_tensor(magic), FormatError);
  auto dtype = good;
  dtype[8 + 4 + 12] = 3;
  EXPECT_THROW(io::decode_tensor(dtype), FormatError);
  auto huge = good;
  huge[12] = 0xff;
  huge[13] = 0xff;
  huge[14] = 0xff;
  huge[15] = 0xff;
  EXPECT_THROW(io::decode_tensor(huge), FormatError);
}

TEST(TensorFile, ShapeInterpretation) {
  io::TensorData two{{2, 3}, std::vector<double>(6, 1.5)};
  EXPECT_EQ(io::to_feature_map<float>(two).shape(), (Shape3{1, 2, 3}));
  io::TensorData four{{1, 1, 2, 3}, std::vector<double>(6, 1.5)};
  EXPECT_THROW(io::to_feature_map<float>(four), ShapeError);
  io::TensorData mismatch{{2, 3}, std::vector<double>(5, 1.5)};
  EXPECT_THROW(io::encode_tensor(mismatch), ShapeError);
}

TransDenoConfig ckpt_config() {
  TransDenoConfig c;
  c.channels = 3;
  c.height = 4;
  c.width = 8;
  c.reduction = 2;
  c.degrofc.group_counts = {2, 4, 8};
  c.degrofc.convention = BlendConvention::standard;
  c.degrofc.offset_mode = OffsetMode::linear;
  return c;
}

TEST(Checkpoint, BitExactRoundTripRestoresForward) {
  const auto p = TransDenoParams<float>::random(ckpt_config(), 9);
  const auto bytes = io::encode_checkpoint(p);
  const auto q = io::decode_checkpoint<float>(bytes);
  EXPECT_TRUE(q == p);
  EXPECT_EQ(q.config(), p.config());
  EXPECT_EQ(io::encode_checkpoint(q), bytes);
  const auto M = random_map<float>(p.config().shape(), 10);
  EXPECT_EQ(transdeno_forward(M, q), transdeno_forward(M, p));
}

TEST(Checkpoint, FileRoundTripDouble) {
  TempDir dir;
  auto c = ckpt_config();
  c.channels = 4;
  c.axis = AttentionAxis::channel;
  c.degrofc.group_counts = {1, 2};
  const auto p = TransDenoParams<double>::random(c, 4);
  io::write_checkpoint(dir.path() / "p.ckpt", p);
  EXPECT_TRUE(io::read_checkpoint<double>(dir.path() / "p.ckpt") == p);
  const auto as_float = io::read_checkpoint<float>(dir.path() / "p.ckpt");
  EXPECT_EQ(as_float.config(), p.config());
}

TEST(Checkpoint, RecordsAreSortedByPath) {
  const auto p = TransDenoParams<float>::random(ckpt_config(), 1);
  const auto b = io::encode_checkpoint(p);
  const std::string s(b.begin(), b.end());
  const auto a = s.find("stage1.branch[2].bias"), z = s.find("stage2.coeff.weight");
  ASSERT_NE(a, std::string::npos);
  ASSERT_NE(z, std::string::npos);
  EXPECT_LT(a, z);
}

TEST(Checkpoint, RejectsCorruption) {
  const auto good = io::encode_checkpoint(TransDenoParams<float>::random(ckpt_config(), 2));
  auto future = good;
  future[8] = 2;
  try {
    io::decode_checkpoint<float>(future);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos) << e.what();
  }
  auto magic = good;
  magic[3] = 'x';
  EXPECT_THROW(io::decode_checkpoint<float>(magic), FormatError);
  for (std::size_t cut : {4ul, 12ul, 40ul, good.size() / 2, good.size() - 1}) {
    EXPECT_THROW(io::decode_checkpoint<float>(Bytes(good.begin(), good.begin() + static_cast<long>(cut))),
                 FormatError);
  }
  auto trailing = good;
  trailing.push_back(1);
  EXPECT_THROW(io::decode_checkpoint<float>(trailing), FormatError);
  auto bad_groups = good;
  bad_groups[8 + 4 + 16 + 4] = 3;  // first group count 2 -> 3
  EXPECT_THROW(io::decode_checkpoint<float>(bad_groups), FormatError);
  auto bad_path = good;
  const std::string s(good.begin(), good.end());
  bad_path[s.find("stage1.coeff.bias")] = 'X';
  EXPECT_THROW(io::decode_checkpoint<float>(bad_path), FormatError);
}

TEST(AtomicWrite, ReplacesWholeFileAndLeavesNoTemp) {
  TempDir dir;
  const auto f = dir.path() / "out.txt";
  io::write_file_atomic(f, std::string_view("first version, longer"));
  io::write_file_atomic(f, std::string_view("second"));
  const auto b = io::read_file(f);
  EXPECT_EQ(std::string(b.begin(), b.end()), "second");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++n;
  EXPECT_EQ(n, 1u);
  EXPECT_THROW(io::write_file_atomic(dir.path() / "missing" / "x", std::string_view("y")), Error);
}

io::KeyValueFile parse(const std::string& text) {
  std::istringstream in(text);
  return io::KeyValueFile::parse(in, "cfg");
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const io::ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(KeyValue, ParsesCommentsAndWhitespace) {
  const auto kv = parse("# header\n\n  H = 16  \nlist=2, 4,8 # trailing\nrate=1e-3\n");
  EXPECT_EQ(kv.get_positive("H"), 16u);
  EXPECT_EQ(kv.get_list("list"), (std::vector<std::size_t>{2, 4, 8}));
  EXPECT_DOUBLE_EQ(kv.get_double("rate"), 1e-3);
  EXPECT_EQ(kv.get_string("absent", "dflt"), "dflt");
  EXPECT_EQ(kv.line_of("list"), 4);
}

TEST(KeyValue, DiagnosticsNameTheLine) {
  EXPECT_EQ(error_of([] { parse("a=1\nnot a pair\n"); }), "cfg:2: expected key=value, got 'not a pair'");
  EXPECT_EQ(error_of([] { parse("a=1\n\na=2\n"); }), "cfg:3: duplicate key 'a'");
  EXPECT_EQ(error_of([] { parse("x=1\nH=-4\n").get_u64("H"); }),
            "cfg:2: 'H' must be a nonnegative integer, got '-4'");
  EXPECT_EQ(error_of([] { parse("H=0\n").get_positive("H"); }), "cfg:1: 'H' must be positive");
  EXPECT_EQ(error_of([] { parse("\nr=abc\n").get_double("r"); }), "cfg:2: 'r' must be a finite number, got 'abc'");
  EXPECT_EQ(error_of([] { parse("g=2,,4\n").get_list("g"); }),
            "cfg:1: 'g' must be a comma-separated list of positive integers");
  EXPECT_EQ(error_of([] { parse("a=1\nzz=2\n").require_known({"a"}); }), "cfg:2: unknown key 'zz'");
  EXPECT_EQ(error_of([] { parse("a=1\n").get_u64("b"); }), "cfg: missing required key 'b'");
}

}  // namespace
}  // namespace transdeno
