#include "iapgev/estimation/choice_sets.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>

#include "iapgev/data/csv.hpp"
#include "iapgev/error.hpp"

namespace iapgev::estimation {

namespace {

const char* partition_name(data::Partition p) { return p == data::Partition::train ? "train" : "test"; }

std::size_t parse_index(const std::string& cell, std::size_t row, const std::string& column) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(cell, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (cell.empty() || pos != cell.size() || cell.front() == '-')
        throw ParseError("row " + std::to_string(row) + ", column '" + column + "': not an index '" + cell + "'");
    return static_cast<std::size_t>(v);
}

}  // namespace

Dataset ChoiceSetTable::select(data::Partition p) const {
    Dataset out;
    for (std::size_t n = 0; n < observations.size(); ++n)
        if (partition[n] == p) out.push_back(observations[n]);
    return out;
}

void write_choice_sets(const std::filesystem::path& path, const ChoiceSetTable& table) {
    if (table.partition.size() != table.observations.size())
        throw ContractError("choice-set table needs one partition tag per observation");
    const bool bc = !table.observations.empty() && table.observations.front().perception.has_value();
    const std::size_t nests =
        table.observations.empty() || !table.observations.front().inclusion ? 0
                                                                            : table.observations.front().inclusion->cols();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "observation,partition,alternative,chosen";
    for (const auto& a : table.attributes) out << ',' << a;
    if (bc) out << ",log_bc";
    for (std::size_t m = 0; m < nests; ++m) out << ",alpha_" << m;
    out << '\n';
    for (std::size_t n = 0; n < table.observations.size(); ++n) {
        const auto& obs = table.observations[n];
        if (obs.attributes.cols() != table.attributes.size())
            throw ContractError("observation attribute count differs from the table header");
        if (obs.perception.has_value() != bc || (nests && (!obs.inclusion || obs.inclusion->cols() != nests)))
            throw ContractError("every observation must carry the same optional columns");
        for (std::size_t j = 0; j < obs.size(); ++j) {
            out << n << ',' << partition_name(table.partition[n]) << ',' << j << ',' << (j == obs.chosen ? 1 : 0);
            for (std::size_t a = 0; a < obs.attributes.cols(); ++a) out << ',' << data::format_real(obs.attributes(j, a));
            if (bc) out << ',' << data::format_real((*obs.perception)[j]);
            for (std::size_t m = 0; m < nests; ++m) out << ',' << data::format_real((*obs.inclusion)(j, m));
            out << '\n';
        }
    }
    if (!out) throw DataError("failed writing " + path.string());
}

ChoiceSetTable read_choice_sets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open choice-set file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("choice-set file " + path.string() + " is empty");
    const auto header = data::split_csv_line(line);
    const std::vector<std::string> fixed = {"observation", "partition", "alternative", "chosen"};
    for (std::size_t c = 0; c < fixed.size(); ++c)
        if (c >= header.size() || header[c] != fixed[c])
            throw SchemaError("choice-set file: expected column '" + fixed[c] + "' at position " + std::to_string(c));
    ChoiceSetTable table;
    std::optional<std::size_t> bc_col;
    std::vector<std::size_t> alpha_cols;
    for (std::size_t c = fixed.size(); c < header.size(); ++c) {
        if (header[c] == "log_bc") {
            bc_col = c;
        } else if (header[c].rfind("alpha_", 0) == 0) {
            alpha_cols.push_back(c);
        } else {
            if (bc_col || !alpha_cols.empty()) throw SchemaError("attribute column '" + header[c] + "' after ln BC/alpha");
            table.attributes.push_back(header[c]);
        }
    }
    if (table.attributes.empty()) throw SchemaError("choice-set file has no attribute columns");

    struct Pending {
        std::vector<double> attrs, log_bc, alpha;
        std::optional<std::size_t> chosen;
        std::size_t rows = 0;
    };
    std::vector<Pending> pending;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        const auto cells = data::split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                             " cells, found " + std::to_string(cells.size()));
        const std::size_t n = parse_index(cells[0], row, "observation");
        if (n != pending.size() && n + 1 != pending.size())
            throw ParseError("row " + std::to_string(row) + ": observations must be contiguous and in order");
        if (n == pending.size()) {
            pending.emplace_back();
            if (cells[1] == "train") {
                table.partition.push_back(data::Partition::train);
            } else if (cells[1] == "test") {
                table.partition.push_back(data::Partition::test);
            } else {
                throw ParseError("row " + std::to_string(row) + ": partition must be train or test");
            }
        }
        auto& p = pending[n];
        if (parse_index(cells[2], row, "alternative") != p.rows)
            throw ParseError("row " + std::to_string(row) + ": alternatives must be numbered from 0");
        const auto chosen = parse_index(cells[3], row, "chosen");
        if (chosen > 1) throw ParseError("row " + std::to_string(row) + ": chosen must be 0 or 1");
        if (chosen == 1) {
            if (p.chosen) throw ValidationError("observation " + std::to_string(n) + " has two chosen alternatives");
            p.chosen = p.rows;
        }
        for (std::size_t a = 0; a < table.attributes.size(); ++a)
            p.attrs.push_back(data::parse_real(cells[fixed.size() + a], row, table.attributes[a]));
        if (bc_col) {
            const auto& cell = cells[*bc_col];
            p.log_bc.push_back(cell == "-inf" ? -std::numeric_limits<double>::infinity()
                                              : data::parse_real(cell, row, "log_bc"));
        }
        for (std::size_t c : alpha_cols) p.alpha.push_back(data::parse_real(cells[c], row, header[c]));
        ++p.rows;
    }
    for (std::size_t n = 0; n < pending.size(); ++n) {
        auto& p = pending[n];
        if (!p.chosen) throw ValidationError("observation " + std::to_string(n) + " has no chosen alternative");
        Observation obs;
        obs.chosen = *p.chosen;
        obs.attributes = numeric::DenseMatrix(p.rows, table.attributes.size(), std::move(p.attrs));
        if (bc_col) obs.perception = gev::PerceptionVector{std::move(p.log_bc)};
        if (!alpha_cols.empty()) obs.inclusion = numeric::DenseMatrix(p.rows, alpha_cols.size(), std::move(p.alpha));
        table.observations.push_back(std::move(obs));
    }
    return table;
}

}  // namespace iapgev::estimation
