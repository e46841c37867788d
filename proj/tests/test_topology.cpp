#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "json.hpp"
#include "oracles.h"
#include "qdc/topology.h"

using namespace qdc;

namespace {

std::size_t switches_in_layer(const Fabric& f, int layer) {
  std::size_t c = 0;
  for (std::size_t s = 0; s < f.switch_count(); ++s) c += f.switch_layer(s) == layer;
  return c;
}

std::size_t max_switch_degree(const Fabric& f) {
  std::size_t d = 0;
  for (std::size_t s = 0; s < f.switch_count(); ++s) d = std::max(d, f.degree(f.switch_node(s)));
  return d;
}

std::size_t inter_switch_degree(const Fabric& f, std::size_t sw) {
  std::size_t d = 0;
  for (const auto& a : f.neighbors(f.switch_node(sw))) d += f.is_switch(a.node);
  return d;
}

void check_structure(const Fabric& f) {
  CHECK(f.connected());
  for (std::size_t q = 0; q < f.qpu_count(); ++q) {
    CHECK(f.degree(q) >= 1);
    if (!is_server_centric(f.arch())) {
      for (const auto& a : f.neighbors(q)) CHECK(f.is_switch(a.node));
    }
  }
  for (const auto& l : f.links()) CHECK(l.channels >= 1);
  if (f.port_budget() != Fabric::kUnbounded) {
    for (std::size_t s = 0; s < f.switch_count(); ++s) CHECK(f.degree(f.switch_node(s)) <= f.port_budget());
  }
}

}  // namespace

TEST_CASE("fat-tree radix and counts") {
  const Fabric f16 = build_fattree(16);
  CHECK(f16.params().k == 4);
  CHECK(f16.switch_count() == 20);
  CHECK(switches_in_layer(f16, 0) == 8);
  CHECK(switches_in_layer(f16, 1) == 8);
  CHECK(switches_in_layer(f16, 2) == 4);
  const auto s16 = topology_summary(f16);
  CHECK(s16.qpus_per_rack == 2.0);
  CHECK(s16.tor_count == 8);

  const Fabric f64 = build_fattree(64);
  CHECK(f64.switch_count() == 80);
  CHECK(topology_summary(f64).ports_per_switch == 8);
  CHECK(max_switch_degree(f64) == 8);

  const Fabric f1 = build_fattree(1);
  CHECK(f1.params().k == 2);
  CHECK(f1.switch_count() == 5);
  CHECK(f1.neighbors(0).size() == 1);
  CHECK(f1.neighbors(0)[0].node == f1.switch_node(0));
}

TEST_CASE("fat-tree radix property over N in 1..512") {
  for (std::size_t n = 1; n <= 512; ++n) {
    const int k = fattree_radix(n);
    CHECK(k % 2 == 0);
    CHECK(static_cast<std::size_t>(k) * k * k / 4 >= n);
    if (k > 2) CHECK(static_cast<std::size_t>(k - 2) * (k - 2) * (k - 2) / 4 < n);
  }
  for (std::size_t n : {1, 2, 5, 17, 54, 100, 250}) {
    const Fabric f = build_fattree(n);
    const auto k = static_cast<std::size_t>(f.params().k);
    CHECK(f.switch_count() == 5 * k * k / 4);
    check_structure(f);
  }
}

TEST_CASE("fat-tree placement is contiguous per edge switch") {
  const Fabric f = build_fattree(64);
  const std::size_t half = 4;
  for (std::size_t q = 0; q < 64; ++q) {
    REQUIRE(f.degree(q) == 1);
    CHECK(f.neighbors(q)[0].node == f.switch_node(q / half));
  }
}

TEST_CASE("clos instances from the summary table") {
  struct Row {
    std::size_t n;
    ClosPolicy policy;
    int k;
    std::size_t tors, rack, switches;
  };
  const Row rows[] = {
      {16, ClosPolicy::kTight, 8, 16, 1, 28},    {16, ClosPolicy::kCompact, 6, 9, 2, 18},
      {64, ClosPolicy::kTight, 8, 16, 4, 28},    {64, ClosPolicy::kCompact, 8, 16, 4, 28},
      {128, ClosPolicy::kTight, 16, 64, 2, 88},  {128, ClosPolicy::kCompact, 10, 25, 6, 40},
  };
  for (const auto& r : rows) {
    CAPTURE(r.n);
    const Fabric f = build_clos(r.n, r.policy);
    CHECK(f.params().k == r.k);
    CHECK(f.params().tors == r.tors);
    CHECK(f.params().rack == r.rack);
    CHECK(f.switch_count() == r.switches);
    CHECK(f.switch_count() == r.tors + 3 * static_cast<std::size_t>(r.k) / 2);
    check_structure(f);
  }
  CHECK(topology_summary(build_clos(128, ClosPolicy::kCompact)).n_capacity == 150);
  CHECK(topology_summary(build_clos(128, ClosPolicy::kTight)).n_capacity == 128);
}

TEST_CASE("clos policies dominate each other on their own objective") {
  for (std::size_t n = 1; n <= 300; n += 7) {
    CAPTURE(n);
    const Fabric t = build_clos(n, ClosPolicy::kTight);
    const Fabric c = build_clos(n, ClosPolicy::kCompact);
    const auto unused = [n](const Fabric& f) { return f.params().tors * f.params().rack - n; };
    CHECK(t.params().tors * t.params().rack >= n);
    CHECK(unused(t) <= unused(c));
    CHECK(c.switch_count() <= t.switch_count());
    CHECK(t.params().rack <= static_cast<std::size_t>(t.params().k - 2));
  }
}

TEST_CASE("clos wiring is full bipartite between layers") {
  const Fabric f = build_clos(64, ClosPolicy::kTight);
  for (std::size_t s = 0; s < f.switch_count(); ++s) {
    std::size_t up = 0;
    for (const auto& a : f.neighbors(f.switch_node(s))) {
      if (f.is_switch(a.node) && f.switch_layer(f.switch_index(a.node)) > f.switch_layer(s)) ++up;
    }
    if (f.switch_layer(s) == 0) CHECK(up == 8);   // every aggregation switch
    if (f.switch_layer(s) == 1) CHECK(up == 4);   // every core switch
    if (f.switch_layer(s) == 2) CHECK(up == 0);
  }
}

TEST_CASE("qfly variants") {
  const Fabric full64 = build_qfly(64, RingPolicy::kFull, fattree_radix(64));
  CHECK(full64.switch_count() == 16);
  CHECK(full64.params().qpus_per_switch == 4);
  CHECK(full64.params().k_ring == 15);
  CHECK(topology_summary(full64).ports_per_switch == 19);
  for (std::size_t s = 0; s < 16; ++s) CHECK(inter_switch_degree(full64, s) == 15);

  const Fabric res128 = build_qfly(128, RingPolicy::kResidual, fattree_radix(128));
  CHECK(res128.switch_count() == 32);
  CHECK(res128.params().k_ring == 4);
  CHECK(topology_summary(res128).ports_per_switch == 8);
  for (std::size_t s = 0; s < 32; ++s) CHECK(inter_switch_degree(res128, s) == 4);

  const Fabric tri = build_qfly(6, RingPolicy::kFull, 4);
  CHECK(tri.switch_count() == 3);
  for (std::size_t s = 0; s < 3; ++s) CHECK(inter_switch_degree(tri, s) == 2);

  for (auto policy : {RingPolicy::kFull, RingPolicy::kHalf, RingPolicy::kResidual}) {
    for (std::size_t n : {3, 16, 40, 64, 128}) check_structure(build_qfly(n, policy, fattree_radix(n)));
  }
}

TEST_CASE("qfly circulant degree is exact for even rings") {
  for (std::size_t s_count : {5, 8, 9, 16}) {
    for (int k_ref : {8, 12, 16}) {
      const std::size_t m = static_cast<std::size_t>(k_ref) / 2;
      const Fabric f = build_qfly(s_count * m, RingPolicy::kResidual, k_ref);
      const std::size_t want = std::min<std::size_t>(f.params().k_ring, s_count - 1);
      for (std::size_t s = 0; s < s_count; ++s) {
        CAPTURE(s_count);
        CAPTURE(k_ref);
        if (want % 2 == 0 || s_count % 2 == 0) CHECK(inter_switch_degree(f, s) == want);
        CHECK(inter_switch_degree(f, s) <= want);
      }
    }
  }
}

TEST_CASE("qfly rejects invalid radices and handles a single switch") {
  CHECK_THROWS_AS(build_qfly(8, RingPolicy::kResidual, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_qfly(8, RingPolicy::kFull, 5), std::invalid_argument);
  const Fabric one = build_qfly(2, RingPolicy::kHalf, 4);
  CHECK(one.switch_count() == 1);
  CHECK(one.links().size() == 2);
}

TEST_CASE("qfly single-link ring degree widens to a ring") {
  // k_ref = 2 gives m = 1 and a half-policy degree of 1.
  const Fabric f = build_qfly(6, RingPolicy::kHalf, 2);
  CHECK(f.params().k_ring == 2);
  for (std::size_t s = 0; s < 6; ++s) CHECK(inter_switch_degree(f, s) == 2);
  CHECK(f.connected());
}

TEST_CASE("bcube active switches") {
  const Fabric b64 = build_bcube(64, 8);
  CHECK(b64.params().bcube_levels == 2);
  CHECK(b64.switch_count() == 16);

  const Fabric b128 = build_bcube(128, 8);
  CHECK(b128.params().bcube_levels == 3);
  CHECK(switches_in_layer(b128, 0) == 16);
  CHECK(switches_in_layer(b128, 1) == 16);
  CHECK(switches_in_layer(b128, 2) == 64);
  CHECK(b128.switch_count() == 96);
  CHECK(topology_summary(b128).qpus_per_rack == doctest::Approx(128.0 / 96.0));

  const Fabric b8 = build_bcube(8, 8);
  CHECK(b8.switch_count() == 1);
  CHECK(b8.degree(b8.switch_node(0)) == 8);

  const Fabric b16 = build_bcube(16, 4);
  CHECK(b16.switch_count() == 8);
  CHECK(topology_summary(b16).qpus_per_rack == 2.0);
}

TEST_CASE("bcube active counts match distinct digit groups") {
  for (int n : {2, 3, 4, 8}) {
    for (std::size_t qpus : {1, 5, 9, 27, 30, 64, 100}) {
      const Fabric f = build_bcube(qpus, n);
      const int levels = f.params().bcube_levels;
      std::size_t expected = 0;
      std::size_t step = 1;
      for (int l = 0; l < levels; ++l) {
        std::set<std::size_t> keys;
        for (std::size_t q = 0; q < qpus; ++q) keys.insert(q / (step * n) * step + q % step);
        expected += keys.size();
        step *= static_cast<std::size_t>(n);
      }
      CAPTURE(n);
      CAPTURE(qpus);
      CHECK(f.switch_count() == expected);
      for (std::size_t q = 0; q < qpus; ++q) CHECK(f.degree(q) == static_cast<std::size_t>(levels));
      check_structure(f);
      if (step == qpus) {
        CHECK(f.switch_count() == static_cast<std::size_t>(levels) * qpus / static_cast<std::size_t>(n));
      }
    }
  }
}

TEST_CASE("bsm allocation") {
  Fabric ft = build_fattree(64);
  allocate_bsms(ft, BsmModel::per_switch(2));
  const auto total = [](const Fabric& f) {
    return std::accumulate(f.bsm_counts().begin(), f.bsm_counts().end(), std::size_t{0});
  };
  CHECK(total(ft) == 160);

  Fabric bc = build_bcube(64, 8);
  allocate_bsms(bc, BsmModel::total_budget(100));
  for (std::size_t s = 0; s < 16; ++s) CHECK(bc.bsm(s) == (s < 4 ? 7u : 6u));

  allocate_bsms(bc, BsmModel::total_budget(0));
  CHECK(total(bc) == 0);

  for (std::size_t budget : {0, 1, 7, 8, 99, 100, 1000}) {
    for (ArchTag tag : all_archs()) {
      Fabric f = build_fabric(tag, 40);
      allocate_bsms(f, BsmModel::total_budget(budget));
      CHECK(total(f) == budget);
      const auto [lo, hi] = std::minmax_element(f.bsm_counts().begin(), f.bsm_counts().end());
      CHECK(*hi - *lo <= 1);
    }
  }
}

TEST_CASE("bsm model text") {
  CHECK(to_string(parse_bsm_model("per-switch:2")) == "per-switch:2");
  CHECK(to_string(parse_bsm_model("total:100")) == "total:100");
  CHECK_THROWS(parse_bsm_model("total"));
  CHECK_THROWS(parse_bsm_model("bogus:3"));
  CHECK_THROWS(parse_bsm_model("total:-1"));
}

TEST_CASE("summary table grid") {
  struct Row {
    ArchTag arch;
    std::size_t n, capacity, switches;
    double rack;
    std::size_t ports, tors;
  };
  // QFly Half ports are left out: the structural rule gives m + ceil(m/2).
  const Row rows[] = {
      {ArchTag::kQFlyFull, 16, 16, 8, 2, 9, 8},      {ArchTag::kQFlyResidual, 16, 16, 8, 2, 4, 8},
      {ArchTag::kClosTight, 16, 16, 28, 1, 8, 16},   {ArchTag::kClosCompact, 16, 18, 18, 2, 6, 9},
      {ArchTag::kFatTree, 16, 16, 20, 2, 4, 8},      {ArchTag::kBCube, 16, 16, 8, 2, 4, 8},
      {ArchTag::kQFlyFull, 64, 64, 16, 4, 19, 16},   {ArchTag::kQFlyResidual, 64, 64, 16, 4, 8, 16},
      {ArchTag::kClosTight, 64, 64, 28, 4, 8, 16},   {ArchTag::kClosCompact, 64, 64, 28, 4, 8, 16},
      {ArchTag::kFatTree, 64, 64, 80, 4, 8, 32},     {ArchTag::kBCube, 64, 64, 16, 4, 8, 16},
      {ArchTag::kQFlyFull, 128, 128, 32, 4, 35, 32}, {ArchTag::kQFlyResidual, 128, 128, 32, 4, 8, 32},
      {ArchTag::kClosTight, 128, 128, 88, 2, 16, 64}, {ArchTag::kClosCompact, 128, 150, 40, 6, 10, 25},
      {ArchTag::kFatTree, 128, 128, 80, 4, 8, 32},   {ArchTag::kBCube, 128, 128, 96, 128.0 / 96.0, 8, 96},
  };
  for (const auto& r : rows) {
    CAPTURE(to_string(r.arch));
    CAPTURE(r.n);
    const SummaryRow s = topology_summary(build_fabric(r.arch, r.n));
    CHECK(s.n_capacity == r.capacity);
    CHECK(s.total_switches == r.switches);
    CHECK(s.qpus_per_rack == doctest::Approx(r.rack));
    CHECK(s.ports_per_switch == r.ports);
    CHECK(s.tor_count == r.tors);
  }
  for (std::size_t n : {16, 64, 128}) {
    const SummaryRow half = topology_summary(build_fabric(ArchTag::kQFlyHalf, n));
    CHECK(half.total_switches == topology_summary(build_fabric(ArchTag::kQFlyFull, n)).total_switches);
  }
}

TEST_CASE("builders are deterministic and round-trip through text") {
  for (ArchTag tag : all_archs()) {
    Fabric a = build_fabric(tag, 37);
    Fabric b = build_fabric(tag, 37);
    allocate_bsms(a, BsmModel::total_budget(50));
    allocate_bsms(b, BsmModel::total_budget(50));
    const std::string text = write_fabric_text(a);
    CHECK(text == write_fabric_text(b));
    const Fabric c = read_fabric_text(text);
    CHECK(write_fabric_text(c) == text);
    CHECK(c.arch() == tag);
    CHECK(c.switch_count() == a.switch_count());
    CHECK(c.links().size() == a.links().size());
  }
}

TEST_CASE("fabric text rejects malformed input") {
  CHECK_THROWS(read_fabric_text("node qpu 0\n"));
  CHECK_THROWS(read_fabric_text("arch fattree 2 2\nedge q0 s9 5 0.1\n"));
  CHECK_THROWS(read_fabric_text("arch nonsense 2 2\n"));
}

TEST_CASE("fabric json lists nodes, edges and summary") {
  Fabric f = build_fattree(16);
  allocate_bsms(f, BsmModel::per_switch(2));
  const auto j = nlohmann::json::parse(write_fabric_json(f));
  CHECK(j["nodes"].size() == 36);
  CHECK(j["edges"].size() == f.links().size());
  CHECK(j["summary"]["switches"] == 20);
}

TEST_CASE("arch names") {
  for (ArchTag tag : all_archs()) CHECK(parse_arch(to_string(tag)) == tag);
  CHECK_THROWS(parse_arch("torus"));
  CHECK(is_server_centric(ArchTag::kBCube));
  CHECK_FALSE(is_server_centric(ArchTag::kFatTree));
}

TEST_CASE("node ids") {
  const Fabric f = build_fattree(16);
  CHECK(f.node_id(3) == NodeId{NodeKind::kQpu, 3, std::nullopt});
  CHECK(f.node_id(f.switch_node(19)) == NodeId{NodeKind::kSwitch, 19, 2});
  const Fabric q = build_qfly(16, RingPolicy::kFull, 4);
  CHECK_FALSE(q.node_id(q.switch_node(0)).layer.has_value());
}

TEST_CASE("qpu distances follow the topology") {
  const Fabric ft = build_fattree(16);
  CHECK(oracle::hop_distance(ft, 0, 1, true) == 2);  // same edge switch
  CHECK(oracle::hop_distance(ft, 0, 2, true) == 4);  // same pod
  CHECK(oracle::hop_distance(ft, 0, 4, true) == 6);  // across pods
  const Fabric qf = build_qfly(64, RingPolicy::kFull, 8);
  for (std::size_t b = 1; b < 64; ++b) CHECK(oracle::hop_distance(qf, 0, b, true) <= 3);
}
