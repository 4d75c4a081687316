#include "iapgev/data/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "iapgev/error.hpp"

namespace iapgev::data {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return {buf, res.ptr};
}

double parse_real(std::string_view cell, std::size_t row, const std::string& column) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw ParseError("row " + std::to_string(row) + ", column '" + column + "': not a number '" +
                         std::string(cell) + "'");
    return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.emplace_back(trim(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    if (quoted) throw ParseError("unterminated quoted field");
    out.emplace_back(trim(field));
    return out;
}

Corpus load_csv(const std::filesystem::path& path, const AttributeSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("corpus file " + path.string() + " is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);

    std::map<std::string, std::size_t> position;
    for (std::size_t c = 0; c < header.size(); ++c) position.emplace(header[c], c);
    std::vector<std::size_t> source(schema.size());
    for (std::size_t a = 0; a < schema.size(); ++a) {
        auto it = position.find(schema[a].name);
        if (it == position.end()) throw SchemaError("missing column '" + schema[a].name + "'");
        source[a] = it->second;
    }

    std::vector<double> values;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                             " cells, found " + std::to_string(cells.size()));
        for (std::size_t a = 0; a < schema.size(); ++a) {
            const double v = parse_real(cells[source[a]], row, schema[a].name);
            if (v < 0.0)
                throw ValidationError("row " + std::to_string(row) + ", column '" + schema[a].name +
                                      "': negative value " + format_real(v));
            values.push_back(v);
        }
    }
    Corpus corpus;
    corpus.schema = schema;
    corpus.rows = numeric::DenseMatrix(row, schema.size(), std::move(values));
    return corpus;
}

void write_csv(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (std::size_t a = 0; a < corpus.schema.size(); ++a) out << (a ? "," : "") << corpus.schema[a].name;
    out << '\n';
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        for (std::size_t c = 0; c < corpus.rows.cols(); ++c) out << (c ? "," : "") << format_real(corpus.rows(r, c));
        out << '\n';
    }
    if (!out) throw DataError("failed writing " + path.string());
}

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p += ".meta.json";
    return p;
}

void write_metadata(const std::filesystem::path& path, const Corpus& corpus) {
    nlohmann::ordered_json j;
    j["format"] = "iapgev-corpus";
    j["version"] = 1;
    j["rows"] = corpus.size();
    auto& attrs = j["schema"] = nlohmann::ordered_json::array();
    for (const auto& a : corpus.schema.attributes())
        attrs.push_back({{"name", a.name}, {"unit", a.unit}, {"mean", a.mean}, {"std", a.std}});
    if (corpus.split_info) {
        std::vector<std::size_t> train;
        for (std::size_t i = 0; i < corpus.assignment.size(); ++i)
            if (corpus.assignment[i] == Partition::train) train.push_back(i);
        j["split"] = {{"seed", corpus.split_info->seed},
                      {"train_fraction", corpus.split_info->train_fraction},
                      {"train_rows", train}};
    }
    if (corpus.normalization)
        j["normalization"] = {{"mean", corpus.normalization->mean}, {"std", corpus.normalization->std}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void read_metadata(const std::filesystem::path& path, Corpus& corpus) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        if (j.at("format") != "iapgev-corpus") throw SchemaError(path.string() + " is not a corpus sidecar");
        if (j.at("version") != 1) throw VersionError("unsupported corpus sidecar version");
        if (j.at("rows").get<std::size_t>() != corpus.size())
            throw SchemaError("sidecar row count does not match the corpus");
        std::vector<Attribute> attrs;
        for (const auto& a : j.at("schema"))
            attrs.push_back({a.at("name"), a.at("unit"), a.at("mean"), a.at("std")});
        AttributeSchema schema(std::move(attrs));
        if (schema.names() != corpus.schema.names()) throw SchemaError("sidecar schema does not match the corpus");
        corpus.schema = std::move(schema);
        if (j.contains("split")) {
            const auto& s = j["split"];
            corpus.split_info = SplitInfo{s.at("seed").get<std::uint64_t>(), s.at("train_fraction").get<double>()};
            corpus.assignment.assign(corpus.size(), Partition::test);
            for (std::size_t i : s.at("train_rows").get<std::vector<std::size_t>>()) {
                if (i >= corpus.size()) throw SchemaError("sidecar train row out of range");
                corpus.assignment[i] = Partition::train;
            }
        }
        if (j.contains("normalization")) {
            Normalization n{j["normalization"].at("mean").get<std::vector<double>>(),
                            j["normalization"].at("std").get<std::vector<double>>()};
            n.validate();
            corpus.normalization = std::move(n);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

Corpus load_corpus(const std::filesystem::path& csv_path) {
    Corpus corpus = load_csv(csv_path);
    const auto meta = metadata_path(csv_path);
    if (std::filesystem::exists(meta)) read_metadata(meta, corpus);
    return corpus;
}

void save_corpus(const std::filesystem::path& csv_path, const Corpus& corpus) {
    write_csv(csv_path, corpus);
    write_metadata(metadata_path(csv_path), corpus);
}

}  // namespace iapgev::data
