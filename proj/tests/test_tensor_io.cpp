#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lagan/io.hpp"
#include "lagan/rng.hpp"
#include "lagan/tensor.hpp"

using namespace lagan;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("tensor shape and indexing") {
  Tensor t({2, 3, 4});
  REQUIRE(t.numel() == 24);
  REQUIRE(t.rank() == 3);
  t.at(1, 2, 3) = 7.5;
  REQUIRE(t[23] == 7.5);
  REQUIRE_THROWS_AS(Tensor({2}, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("tensor gradient buffer") {
  Tensor t({3});
  REQUIRE_FALSE(t.has_grad());
  t.ensure_grad();
  REQUIRE(t.has_grad());
  t.grad_data()[1] = 2.0;
  t.zero_grad();
  REQUIRE(t.grad_data()[1] == 0.0);
}

TEST_CASE("split rng determinism and stream independence") {
  SplitRng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  SplitRng s0 = SplitRng::child(7, 0);
  SplitRng s1 = SplitRng::child(7, 1);
  REQUIRE(s0.next_u64() != s1.next_u64());

  SplitRng u(3);
  for (int i = 0; i < 1000; ++i) {
    double x = u.uniform01();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
}

TEST_CASE("rng normal moments are sane") {
  SplitRng r(11);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    sum += x;
    sq += x * x;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.03);
  REQUIRE(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("checkpoint array round-trip is bit-exact") {
  SplitRng r(5);
  std::vector<io::NamedArray> entries;
  Tensor a({3, 4});
  for (int64_t i = 0; i < a.numel(); ++i) a[i] = r.normal() * 1e8;
  Tensor b({2, 2, 2, 2});
  for (int64_t i = 0; i < b.numel(); ++i) b[i] = r.uniform(-1e-12, 1e-12);
  Tensor s = Tensor::scalar(0.1 + 0.2);  // not representable exactly; must survive
  entries.push_back({"weights/a", a});
  entries.push_back({"weights/b", b});
  entries.push_back({"meta/s", s});

  std::string path = temp_path("lagan_test_ckpt.lgn");
  io::save_arrays(path, entries);
  auto loaded = io::load_arrays(path);
  REQUIRE(loaded.size() == 3);
  for (size_t k = 0; k < entries.size(); ++k) {
    REQUIRE(loaded[k].name == entries[k].name);
    REQUIRE(loaded[k].tensor.shape() == entries[k].tensor.shape());
    for (int64_t i = 0; i < entries[k].tensor.numel(); ++i) {
      // Bit-level comparison, not value comparison.
      uint64_t x, y;
      std::memcpy(&x, &entries[k].tensor[i], 8);
      std::memcpy(&y, &loaded[k].tensor[i], 8);
      REQUIRE(x == y);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("corrupted magic bytes raise a format error") {
  std::string path = temp_path("lagan_test_badmagic.lgn");
  {
    std::ofstream out(path, std::ios::binary);
    out.write("NOPE", 4);
    io::put_u64(out, 0);
  }
  REQUIRE_THROWS_AS(io::load_arrays(path), Error);
  try {
    io::load_arrays(path);
  } catch (const Error& e) {
    REQUIRE(e.category() == ErrorCategory::format);
  }
  std::filesystem::remove(path);
}

TEST_CASE("truncated checkpoint raises a format error") {
  std::string path = temp_path("lagan_test_trunc.lgn");
  {
    std::ofstream out(path, std::ios::binary);
    out.write("LGN1", 4);
    io::put_u64(out, 2);
    io::put_u32(out, 1);
    out.write("x", 1);
    io::put_u32(out, 1);
    io::put_u64(out, 3);
    io::put_f64(out, 1.0);  // two values short, second entry missing
  }
  REQUIRE_THROWS_AS(io::load_arrays(path), Error);
  std::filesystem::remove(path);
}

TEST_CASE("missing file raises an io error") {
  try {
    io::load_arrays(temp_path("lagan_definitely_absent.lgn"));
    FAIL("expected an error");
  } catch (const Error& e) {
    REQUIRE(e.category() == ErrorCategory::io);
  }
}

TEST_CASE("image dataset round-trip") {
  std::vector<JetImage> images(3);
  SplitRng r(9);
  for (auto& img : images) {
    img.label = r.bernoulli(0.5) ? Label::signal : Label::background;
    img.origin = r.bernoulli(0.5) ? Origin::generated : Origin::real;
    for (auto& px : img.pixels) px = r.bernoulli(0.1) ? r.uniform(0.0, 300.0) : 0.0;
  }
  std::string path = temp_path("lagan_test_images.jim");
  io::save_images(path, images);
  auto loaded = io::load_images(path);
  REQUIRE(loaded.size() == images.size());
  for (size_t k = 0; k < images.size(); ++k) {
    REQUIRE(loaded[k].label == images[k].label);
    REQUIRE(loaded[k].origin == images[k].origin);
    REQUIRE(loaded[k].pixels == images[k].pixels);
  }
  std::filesystem::remove(path);
}

TEST_CASE("event dataset round-trip") {
  std::vector<JetEvent> events(2);
  events[0].label = Label::signal;
  events[0].constituents = {{100.0, 0.1, -0.2}, {50.0, -0.3, 0.15}};
  events[0].subjet1 = {0.1, -0.2};
  events[0].subjet2 = SubjetDirection{-0.3, 0.15};
  events[1].label = Label::background;
  events[1].constituents = {{200.0, 0.0, 0.0}};
  events[1].subjet1 = {0.0, 0.0};

  std::string path = temp_path("lagan_test_events.jev");
  io::save_events(path, events);
  auto loaded = io::load_events(path);
  REQUIRE(loaded.size() == 2);
  REQUIRE(loaded[0].subjet2.has_value());
  REQUIRE(loaded[0].subjet2->phi == events[0].subjet2->phi);
  REQUIRE_FALSE(loaded[1].subjet2.has_value());
  REQUIRE(loaded[0].constituents[1].pt == 50.0);
  REQUIRE(loaded[1].constituents[0].pt == 200.0);
  std::filesystem::remove(path);
}
