#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "popsynth/errors.hpp"
#include "popsynth/ingest.hpp"

using namespace popsynth;
namespace fs = std::filesystem;

namespace {

Schema test_schema() {
    std::vector<AttributeDef> attrs = {
        {"Age", {"young", "old"}, Layer::SocioDemographic, AttrType::Main, true, false},
        {"Gender", {"F", "M"}, Layer::SocioDemographic, AttrType::Main, false, false},
    };
    std::vector<DataSourceDescriptor> sources = {
        {"micro", SourceKind::Micro, {"Age", "Gender"}, std::nullopt, true, "", {}},
        {"microw", SourceKind::Micro, {"Age", "Gender"}, std::string("w"), false, "", {}},
        {"macro", SourceKind::Macro, {"Age", "Gender"}, std::nullopt, false, "", {}},
    };
    return Schema(attrs, sources, CoreSpec{{"Age", "Gender"}});
}

std::string write_file(const std::string& name, const std::string& content) {
    auto path = (fs::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("listwise deletion removes exactly the incomplete records") {
    auto schema = test_schema();
    auto path = write_file("pi_micro1.csv", "Age,Gender\nyoung,F\nNA,M\nold,M\n");
    auto ds = ingest_micro(path, schema.source("micro"), schema, {}, MissingPolicy::ListwiseDelete);
    CHECK(ds.records.size() == 2);
    CHECK(ds.stats.rows_dropped == 1);
    CHECK(ds.records[0] == std::vector<int>{0, 0});
    CHECK(ds.records[1] == std::vector<int>{1, 1});
    fs::remove(path);
}

TEST_CASE("mode imputation fills missing cells with the modal state") {
    auto schema = test_schema();
    auto path = write_file("pi_micro2.csv", "Age,Gender\nyoung,F\nyoung,F\nyoung,M\nold,NA\n");
    auto ds = ingest_micro(path, schema.source("micro"), schema, {}, MissingPolicy::ModeImpute);
    REQUIRE(ds.records.size() == 4);
    CHECK(ds.records[3][1] == 0);  // F
    CHECK(ds.stats.cells_imputed == 1);
    // complete records untouched
    CHECK(ds.records[0] == std::vector<int>{0, 0});
    CHECK(ds.records[2] == std::vector<int>{0, 1});
    fs::remove(path);
}

TEST_CASE("mode imputation tie-break picks the lowest state index") {
    auto schema = test_schema();
    auto path = write_file("pi_micro3.csv", "Age,Gender\nyoung,F\nyoung,M\nold,NA\n");
    auto ds = ingest_micro(path, schema.source("micro"), schema, {}, MissingPolicy::ModeImpute);
    CHECK(ds.records[2][1] == 0);
    fs::remove(path);
}

TEST_CASE("harmonization maps raw tokens, missing sentinels and drop rules") {
    auto schema = test_schema();
    HarmonizationMap map;
    map.rules["Age"].to_state["0-30"] = "young";
    map.rules["Age"].to_state["31-99"] = "old";
    map.rules["Gender"].special["-9"] = true;   // missing
    map.rules["Gender"].special["XX"] = false;  // drop record
    auto path = write_file("pi_micro4.csv", "Age,Gender\n0-30,F\n31-99,-9\n0-30,XX\n");
    auto ds = ingest_micro(path, schema.source("micro"), schema, map, MissingPolicy::Keep);
    REQUIRE(ds.records.size() == 2);
    CHECK(ds.records[0] == std::vector<int>{0, 0});
    CHECK(ds.records[1][0] == 1);
    CHECK(ds.records[1][1] == kMissing);
    CHECK(ds.stats.rows_dropped == 1);
    fs::remove(path);
}

TEST_CASE("unmapped token that is not a state is an error") {
    auto schema = test_schema();
    auto path = write_file("pi_micro5.csv", "Age,Gender\nyoungish,F\n");
    CHECK_THROWS_AS(
        ingest_micro(path, schema.source("micro"), schema, {}, MissingPolicy::ListwiseDelete),
        ValidationError);
    fs::remove(path);
}

TEST_CASE("missing columns and empty results are errors") {
    auto schema = test_schema();
    auto p1 = write_file("pi_micro6.csv", "Age\nyoung\n");
    CHECK_THROWS_AS(
        ingest_micro(p1, schema.source("micro"), schema, {}, MissingPolicy::ListwiseDelete),
        ValidationError);
    auto p2 = write_file("pi_micro7.csv", "Age,Gender\nNA,F\n");
    CHECK_THROWS_AS(
        ingest_micro(p2, schema.source("micro"), schema, {}, MissingPolicy::ListwiseDelete),
        ValidationError);
    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("weights are read and must be positive") {
    auto schema = test_schema();
    auto path = write_file("pi_micro8.csv", "Age,Gender,w\nyoung,F,3\nold,M,1\n");
    auto ds = ingest_micro(path, schema.source("microw"), schema, {}, MissingPolicy::ListwiseDelete);
    CHECK(ds.weights == std::vector<double>{3.0, 1.0});
    fs::remove(path);
    auto bad = write_file("pi_micro9.csv", "Age,Gender,w\nyoung,F,0\n");
    CHECK_THROWS_AS(
        ingest_micro(bad, schema.source("microw"), schema, {}, MissingPolicy::ListwiseDelete),
        ValidationError);
    fs::remove(bad);
}

TEST_CASE("macro ingestion sums duplicate combinations") {
    auto schema = test_schema();
    auto path =
        write_file("pi_macro1.csv", "Age,Gender,count\nyoung,F,100\nyoung,M,50\nyoung,F,20\n");
    auto ds = ingest_macro(path, schema.source("macro"), schema, {});
    REQUIRE(ds.combos.size() == 2);
    CHECK(ds.combos[0] == std::vector<int>{0, 0});
    CHECK(ds.counts[0] == doctest::Approx(120.0));
    CHECK(ds.counts[1] == doctest::Approx(50.0));
    fs::remove(path);
}

TEST_CASE("macro ingestion rejects negative and zero-total counts") {
    auto schema = test_schema();
    auto neg = write_file("pi_macro2.csv", "Age,Gender,count\nyoung,F,-5\n");
    CHECK_THROWS_AS(ingest_macro(neg, schema.source("macro"), schema, {}), ValidationError);
    fs::remove(neg);
    auto zero = write_file("pi_macro3.csv", "Age,Gender,count\nyoung,F,0\n");
    CHECK_THROWS_AS(ingest_macro(zero, schema.source("macro"), schema, {}), ValidationError);
    fs::remove(zero);
}

TEST_CASE("empirical frequencies") {
    auto schema = test_schema();

    SUBCASE("unweighted micro counting") {
        PreparedDataset ds;
        ds.kind = SourceKind::Micro;
        ds.columns = {"A"};
        ds.records = {{0}, {0}, {1}};
        auto f = empirical_frequencies(ds, {"A"});
        CHECK(f.values[0] == doctest::Approx(2.0 / 3.0));
        CHECK(f.values[1] == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("weighted micro counting") {
        PreparedDataset ds;
        ds.kind = SourceKind::Micro;
        ds.columns = {"A"};
        ds.records = {{0}, {1}};
        ds.weights = {3.0, 1.0};
        auto f = empirical_frequencies(ds, {"A"});
        CHECK(f.values[0] == doctest::Approx(0.75));
    }
    SUBCASE("macro normalization") {
        PreparedDataset ds;
        ds.kind = SourceKind::Macro;
        ds.columns = {"A"};
        ds.combos = {{0}, {1}};
        ds.counts = {10.0, 30.0};
        auto f = empirical_frequencies(ds, {"A"});
        CHECK(f.values[0] == doctest::Approx(0.25));
        CHECK(f.values[1] == doctest::Approx(0.75));
    }
    SUBCASE("errors") {
        PreparedDataset ds;
        ds.kind = SourceKind::Micro;
        ds.columns = {"A"};
        ds.records = {{0}};
        CHECK_THROWS_AS(empirical_frequencies(ds, {}), ValidationError);
        CHECK_THROWS_AS(empirical_frequencies(ds, {"B"}), ValidationError);
    }
}

TEST_CASE("empirical frequencies sum to one on ingested data") {
    auto schema = test_schema();
    auto path = write_file("pi_micro10.csv", "Age,Gender\nyoung,F\nold,M\nyoung,M\nold,F\nold,M\n");
    auto ds = ingest_micro(path, schema.source("micro"), schema, {}, MissingPolicy::ListwiseDelete);
    for (auto attrs : std::vector<std::vector<std::string>>{
             {"Age"}, {"Gender"}, {"Age", "Gender"}}) {
        auto f = empirical_frequencies(ds, attrs);
        double total = 0.0;
        for (double v : f.values) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    fs::remove(path);
}

TEST_CASE("ingesting the same file twice is deterministic") {
    auto schema = test_schema();
    auto path = write_file("pi_micro11.csv", "Age,Gender\nyoung,F\nold,M\nNA,F\n");
    auto a = ingest_micro(path, schema.source("micro"), schema, {}, MissingPolicy::ListwiseDelete);
    auto b = ingest_micro(path, schema.source("micro"), schema, {}, MissingPolicy::ListwiseDelete);
    CHECK(a == b);
    fs::remove(path);
}

TEST_CASE("prepared datasets round-trip through the columnar text format") {
    auto schema = test_schema();
    auto path = write_file("pi_micro12.csv", "Age,Gender,w\nyoung,F,2\nold,NA,1\n");
    auto ds = ingest_micro(path, schema.source("microw"), schema, {}, MissingPolicy::Keep);
    auto out = (fs::temp_directory_path() / "pi_prepared.csv").string();
    save_prepared(ds, schema, out);
    auto loaded = load_prepared(out, schema);
    CHECK(loaded == ds);
    fs::remove(path);
    fs::remove(out);
}
