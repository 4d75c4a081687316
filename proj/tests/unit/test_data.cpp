#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "iapgev/data/corpus.hpp"
#include "iapgev/data/csv.hpp"
#include "iapgev/data/schema.hpp"
#include "iapgev/data/synth.hpp"
#include "iapgev/error.hpp"
#include "iapgev/numeric/rng.hpp"

using namespace iapgev;
using namespace iapgev::data;
using numeric::DenseMatrix;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "iapgev_test_data";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::string header_without(const std::string& skipped) {
    std::string out;
    for (const auto& name : AttributeSchema::route_attributes().names()) {
        if (name == skipped) continue;
        out += (out.empty() ? "" : ",") + name;
    }
    return out;
}

std::string row_of(double v, std::size_t count) {
    std::string out;
    for (std::size_t i = 0; i < count; ++i) out += (i ? "," : "") + format_real(v + 0.1 * static_cast<double>(i));
    return out;
}

Corpus random_corpus(std::size_t n, std::uint64_t seed) {
    numeric::Rng rng(seed);
    Corpus c;
    c.rows = DenseMatrix(n, 9);
    for (double& v : c.rows.entries()) v = std::exp(rng.normal()) * 1e-3 * static_cast<double>(rng.index(5000));
    return c;
}

}  // namespace

TEST_CASE("route schema") {
    const auto& s = AttributeSchema::route_attributes();
    CHECK(s.size() == 9);
    CHECK(s[route::length_detour].name == "Route length detour");
    CHECK(s[route::length_detour].mean == 1.11);
    CHECK(s[route::length_detour].std == 0.21);
    CHECK(s.index_of("Route time detour") == route::time_detour);
    CHECK_FALSE(s.index_of("nope").has_value());
    CHECK_THROWS_AS(AttributeSchema({{"a", "", 0.0, 1.0}, {"a", "", 0.0, 1.0}}), SchemaError);
    CHECK_THROWS_AS(AttributeSchema({{"a", "", 0.0, 0.0}}), SchemaError);
}

TEST_CASE("load_csv happy path with reordered and extra columns") {
    const auto& names = AttributeSchema::route_attributes().names();
    std::string header = "extra";
    for (auto it = names.rbegin(); it != names.rend(); ++it) header += "," + *it;
    std::string body;
    for (int r = 0; r < 3; ++r) body += "x," + row_of(r + 1.0, 9) + "\n";
    const auto path = scratch("happy.csv");
    write_text(path, header + "\n" + body);
    const Corpus c = load_csv(path);
    REQUIRE(c.size() == 3);
    // columns were written in reverse schema order
    CHECK(c.rows(0, 8) == 1.0);
    CHECK(c.rows(0, 0) == doctest::Approx(1.8));
    CHECK(c.rows(2, 8) == 3.0);
}

TEST_CASE("load_csv errors") {
    const auto path = scratch("bad.csv");
    write_text(path, header_without("Route time detour") + "\n" + row_of(1.0, 8) + "\n");
    try {
        load_csv(path);
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("Route time detour") != std::string::npos);
        CHECK(e.category() == ErrorCategory::data);
    }

    const std::string full = header_without("");
    write_text(path, full + "\n" + row_of(1.0, 9) + "\n1,2,3,abc,5,6,7,8,9\n");
    try {
        load_csv(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("Route average number of links") != std::string::npos);
    }

    write_text(path, full + "\n1,2,3,4,-5,6,7,8,9\n");
    CHECK_THROWS_AS(load_csv(path), ValidationError);
    write_text(path, full + "\n1,2,3,4,5,6,7,8,nan\n");
    CHECK_THROWS_AS(load_csv(path), ParseError);
    write_text(path, full + "\n1,2,3\n");
    CHECK_THROWS_AS(load_csv(path), ParseError);
    CHECK_THROWS_AS(load_csv(scratch("does_not_exist.csv")), DataError);
}

TEST_CASE("csv round trip is bit exact") {
    Corpus c = random_corpus(200, 5);
    c.rows(0, 0) = 0.1 + 0.2;
    c.rows(1, 1) = 5e-324;
    c.rows(2, 2) = 1.7976931348623157e308;
    const auto path = scratch("roundtrip.csv");
    write_csv(path, c);
    const Corpus back = load_csv(path);
    CHECK(back.rows == c.rows);
    for (double v : {0.1, 1.0 / 3.0, 2.0 / 3.0, 123456.789, 1e-300})
        CHECK(parse_real(format_real(v), 1, "x") == v);
}

TEST_CASE("split_csv_line handles quotes") {
    auto cells = split_csv_line(R"(a,"b,c", "d""e" ,f)");
    REQUIRE(cells.size() == 4);
    CHECK(cells[1] == "b,c");
    CHECK(cells[2] == "d\"e");
    CHECK_THROWS_AS(split_csv_line(R"(a,"b)"), ParseError);
}

TEST_CASE("normalization examples") {
    const auto table = Normalization::from_schema(AttributeSchema::route_attributes());
    DenseMatrix one(1, 9, 1.0);
    one(0, route::length_detour) = 1.11;
    CHECK(normalize(one, table)(0, route::length_detour) == doctest::Approx(0.0).epsilon(1e-15));

    Corpus c = split(random_corpus(500, 7), 0.8, 3);
    const auto train = normalize(c.rows_of(Partition::train), *c.normalization);
    const auto refit = Normalization::fit(train);
    for (std::size_t d = 0; d < 9; ++d) {
        CHECK(std::abs(refit.mean[d]) < 1e-12);
        CHECK(std::abs(refit.std[d] - 1.0) < 1e-12);
    }
    const auto z = normalize(c);
    const auto back = denormalize(z, *c.normalization);
    for (std::size_t i = 0; i < back.entries().size(); ++i)
        CHECK(std::abs(back.entries()[i] - c.rows.entries()[i]) < 1e-12 * std::max(1.0, c.rows.entries()[i]));

    DenseMatrix neg(1, 9, -50.0);
    const auto clamped = denormalize(neg, table);
    for (double v : clamped.entries()) CHECK(v == 0.0);
    CHECK_THROWS_AS(Normalization::fit(DenseMatrix(4, 9, 2.0)), SchemaError);
}

TEST_CASE("split rules") {
    const Corpus base = random_corpus(5002, 1);
    const Corpus c = split(base, 0.8, 42);
    CHECK(c.indices(Partition::train).size() == 4001);
    CHECK(c.indices(Partition::test).size() == 1001);
    const Corpus again = split(base, 0.8, 42);
    CHECK(again.assignment == c.assignment);
    CHECK(split(base, 0.8, 43).assignment != c.assignment);

    std::set<std::size_t> all;
    for (auto i : c.indices(Partition::train)) all.insert(i);
    for (auto i : c.indices(Partition::test)) CHECK(all.insert(i).second);
    CHECK(all.size() == base.size());

    // normalization depends only on the training rows
    Corpus shuffled_test = c;
    for (auto i : c.indices(Partition::test)) shuffled_test.rows(i, 0) += 100.0;
    CHECK(Normalization::fit(shuffled_test.rows_of(Partition::train)) == *c.normalization);

    CHECK_THROWS_AS(split(base, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(split(base, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(base.indices(Partition::train), ContractError);
}

TEST_CASE("metadata sidecar round trip") {
    const Corpus c = split(random_corpus(50, 2), 0.6, 9);
    const auto path = scratch("meta.csv");
    save_corpus(path, c);
    const Corpus back = load_corpus(path);
    CHECK(back.rows == c.rows);
    CHECK(back.assignment == c.assignment);
    CHECK(back.split_info->seed == 9);
    CHECK(back.split_info->train_fraction == 0.6);
    CHECK(*back.normalization == *c.normalization);
    CHECK(back.schema == c.schema);

    write_text(metadata_path(path), R"({"format":"iapgev-corpus","version":7,"rows":50,"schema":[]})");
    CHECK_THROWS_AS(load_corpus(path), VersionError);
    write_text(metadata_path(path), "{not json");
    CHECK_THROWS_AS(load_corpus(path), ParseError);
}

TEST_CASE("synthetic calibration hits unit moments") {
    for (const auto& m : synth_calibration()) {
        const auto mv = synth_moments(m);
        CHECK(std::abs(mv[0]) < 1e-10);
        CHECK(std::abs(mv[1] - 1.0) < 1e-10);
    }
}

TEST_CASE("synthetic corpus") {
    const Corpus a = synth_corpus(100000, 2024);
    const auto& schema = AttributeSchema::route_attributes();
    for (double v : a.rows.entries()) REQUIRE(v >= 0.0);
    const auto fit = Normalization::fit(a.rows);
    for (std::size_t d = 0; d < schema.size(); ++d) {
        INFO(schema[d].name);
        CHECK(std::abs(fit.mean[d] - schema[d].mean) / schema[d].mean < 0.02);
        CHECK(std::abs(fit.std[d] - schema[d].std) / schema[d].std < 0.02);
    }
    CHECK(std::abs(fit.mean[route::time_detour] - 1.08) < 0.02 * 1.08);
    const Corpus b = synth_corpus(1000, 2024);
    CHECK(select_rows(a.rows, {0, 1, 2}) == select_rows(b.rows, {0, 1, 2}));
    CHECK(synth_corpus(1000, 2024).rows == b.rows);
    CHECK_FALSE(synth_corpus(1000, 2025).rows == b.rows);
    CHECK_THROWS_AS(synth_corpus(0, 1), ConfigError);
}
