#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "popsynth/bayesnet.hpp"
#include "popsynth/errors.hpp"

using namespace popsynth;
namespace fs = std::filesystem;

namespace {

// A -> B, P(A)=(0.5,0.5), P(B=1|A=0)=0.2, P(B=1|A=1)=0.9
BayesianNetwork chain_ab() {
    NetworkStructure g({"A", "B"});
    g.add_edge(0, 1);
    ParameterSet params(2);
    params[0] = {{}, {}, 2, {0.5, 0.5}};
    params[1] = {{0}, {2}, 2, {0.8, 0.2, 0.1, 0.9}};
    return BayesianNetwork({{"A", {"0", "1"}}, {"B", {"0", "1"}}}, std::move(g),
                           std::move(params));
}

BayesianNetwork single_node(std::vector<double> prior) {
    NetworkStructure g({"A"});
    ParameterSet params(1);
    int card = static_cast<int>(prior.size());
    params[0] = {{}, {}, card, std::move(prior)};
    std::vector<std::string> states;
    for (int i = 0; i < card; ++i) states.push_back(std::to_string(i));
    return BayesianNetwork({{"A", states}}, std::move(g), std::move(params));
}

}  // namespace

TEST_CASE("structure rejects cycles and leaves the graph unchanged") {
    NetworkStructure g({"A", "B", "C"});
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    auto before = g.edges();
    CHECK_THROWS_AS(g.add_edge(2, 0), ValidationError);
    CHECK(g.edges() == before);
}

TEST_CASE("structure honors required and forbidden constraints") {
    NetworkStructure g({"A", "B"});
    g.forbid_edge(1, 0);
    CHECK_THROWS_AS(g.add_edge(1, 0), ValidationError);
    g.require_edge(0, 1);
    CHECK(g.has_edge(0, 1));
    CHECK_THROWS_AS(g.remove_edge(0, 1), ValidationError);
    CHECK_THROWS_AS(g.forbid_edge(0, 1), ValidationError);
}

TEST_CASE("topological order is Kahn's with name tie-break") {
    NetworkStructure g({"b", "a", "c"});
    g.add_edge(2, 0);  // c -> b
    auto order = g.topological_order();
    // roots {a, c} -> a first, then c, then b
    CHECK(order == std::vector<int>{1, 2, 0});
}

TEST_CASE("joint probability of a single node") {
    auto net = single_node({0.3, 0.7});
    CHECK(net.joint_probability(std::vector<int>{1}) == doctest::Approx(0.7));
}

TEST_CASE("joint probability of the two-node chain") {
    auto net = chain_ab();
    CHECK(net.joint_probability(std::vector<int>{1, 1}) == doctest::Approx(0.45));
    // enumeration cross-check: all four joints
    auto joint = net.enumerate_joint();
    REQUIRE(joint.p.size() == 4);
    CHECK(joint.p[0] == doctest::Approx(0.4));   // (0,0)
    CHECK(joint.p[1] == doctest::Approx(0.1));   // (0,1)
    CHECK(joint.p[2] == doctest::Approx(0.05));  // (1,0)
    CHECK(joint.p[3] == doctest::Approx(0.45));  // (1,1)
    double total = 0;
    for (double p : joint.p) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("joint probability validates its assignment") {
    auto net = chain_ab();
    CHECK_THROWS_AS(net.joint_probability(std::vector<int>{1}), ValidationError);
    CHECK_THROWS_AS(net.joint_probability(std::vector<int>{1, 5}), ValidationError);
}

TEST_CASE("deterministic CPTs give a one-hot joint") {
    NetworkStructure g({"A", "B"});
    g.add_edge(0, 1);
    ParameterSet params(2);
    params[0] = {{}, {}, 2, {1.0, 0.0}};
    params[1] = {{0}, {2}, 2, {0.0, 1.0, 1.0, 0.0}};
    BayesianNetwork net({{"A", {"0", "1"}}, {"B", {"0", "1"}}}, std::move(g), std::move(params));
    auto joint = net.enumerate_joint();
    int ones = 0;
    for (double p : joint.p) {
        if (p == 1.0) ++ones;
        else CHECK(p == 0.0);
    }
    CHECK(ones == 1);
}

TEST_CASE("enumerate_joint enforces the cell cap") {
    std::vector<NodeDef> nodes;
    std::vector<std::string> names;
    for (int i = 0; i < 30; ++i) {
        names.push_back("n" + std::to_string(i));
        nodes.push_back({names.back(), {"0", "1"}});
    }
    NetworkStructure g(names);
    ParameterSet params(30);
    for (int i = 0; i < 30; ++i) params[i] = {{}, {}, 2, {0.5, 0.5}};
    BayesianNetwork net(std::move(nodes), std::move(g), std::move(params));
    CHECK_THROWS_AS(net.enumerate_joint(), ValidationError);  // 2^30 > 1e7
}

TEST_CASE("marginals agree with summing the enumerated joint") {
    auto net = chain_ab();
    auto mb = net.marginal({"B"});
    CHECK(mb.values[1] == doctest::Approx(0.55).epsilon(1e-12));

    auto all = net.marginal({"A", "B"});
    auto joint = net.enumerate_joint();
    for (std::size_t i = 0; i < all.values.size(); ++i) {
        CHECK(all.values[i] == doctest::Approx(joint.p[i]).epsilon(1e-12));
    }

    // marginal of a root equals its prior
    auto ma = net.marginal({"A"});
    CHECK(ma.values[0] == doctest::Approx(0.5));
}

TEST_CASE("sampling a deterministic single node") {
    auto net = single_node({1.0, 0.0});
    auto rows = net.sample(5, 123);
    REQUIRE(rows.size() == 5);
    for (const auto& r : rows) CHECK(r == std::vector<int>{0});
}

TEST_CASE("sampling matches exact marginals at 1e5 records") {
    auto net = chain_ab();
    auto rows = net.sample(100'000, 42);
    double b1 = 0;
    for (const auto& r : rows) b1 += r[1];
    CHECK(std::abs(b1 / 100'000 - 0.55) < 0.01);
}

TEST_CASE("sampling is deterministic and thread-count independent") {
    auto net = chain_ab();
    auto a = net.sample(5'000, 7);
    auto b = net.sample(5'000, 7);
    CHECK(a == b);
    SampleOptions par;
    par.threads = 4;
    auto c = net.sample(5'000, 7, par);
    CHECK(a == c);
}

TEST_CASE("root evidence is clamped directly") {
    auto net = chain_ab();
    SampleOptions opt;
    opt.evidence["A"] = 0;
    auto rows = net.sample(100'000, 11, opt);
    double b1 = 0;
    for (const auto& r : rows) {
        CHECK(r[0] == 0);
        b1 += r[1];
    }
    CHECK(std::abs(b1 / 100'000 - 0.2) < 0.01);
}

TEST_CASE("non-root evidence uses rejection and the guard trips on zero-probability evidence") {
    NetworkStructure g({"A", "B"});
    g.add_edge(0, 1);
    ParameterSet params(2);
    params[0] = {{}, {}, 2, {0.5, 0.5}};
    params[1] = {{0}, {2}, 2, {1.0, 0.0, 1.0, 0.0}};  // B always 0
    BayesianNetwork net({{"A", {"0", "1"}}, {"B", {"0", "1"}}}, std::move(g), std::move(params));
    SampleOptions ok;
    ok.evidence["B"] = 0;
    CHECK(net.sample(100, 3, ok).size() == 100);
    SampleOptions impossible;
    impossible.evidence["B"] = 1;
    impossible.max_tries_per_record = 50;
    CHECK_THROWS_AS(net.sample(10, 3, impossible), ValidationError);
}

TEST_CASE("sample rejects n = 0") {
    auto net = chain_ab();
    CHECK_THROWS_AS(net.sample(0, 1), ValidationError);
}

TEST_CASE("CPT rows must sum to one within 1e-9, with renormalization on load") {
    NetworkStructure g({"A"});
    ParameterSet bad(1);
    bad[0] = {{}, {}, 2, {0.6, 0.5}};
    CHECK_THROWS_AS(BayesianNetwork({{"A", {"0", "1"}}}, g, bad), ValidationError);

    ParameterSet close(1);
    close[0] = {{}, {}, 2, {0.5000000001, 0.5}};  // within 1e-9: renormalized
    BayesianNetwork net({{"A", {"0", "1"}}}, std::move(g), std::move(close));
    auto joint = net.enumerate_joint();
    CHECK(joint.p[0] + joint.p[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("model files round-trip") {
    auto net = chain_ab();
    net.provenance()[0] = {"ds_rich", "mle", "abc123"};
    auto path = (fs::temp_directory_path() / "popsynth_model_roundtrip.json").string();
    save_model(net, path);
    auto loaded = load_model(path);
    CHECK(loaded.nodes() == net.nodes());
    CHECK(loaded.structure() == net.structure());
    for (int v = 0; v < 2; ++v) {
        CHECK(loaded.cpt(v).table == net.cpt(v).table);
    }
    CHECK(loaded.provenance()[0].source_id == "ds_rich");
    CHECK(loaded.provenance()[0].method == "mle");
    fs::remove(path);
}
