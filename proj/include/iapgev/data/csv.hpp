#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "iapgev/data/corpus.hpp"

namespace iapgev::data {

// Writes with 17 significant digits, which reads back bit-exact.
std::string format_real(double v);
// Parses a full cell; throws ParseError naming the row and column otherwise.
double parse_real(std::string_view cell, std::size_t row, const std::string& column);

std::vector<std::string> split_csv_line(std::string_view line);

// Columns are matched by name in any order; unknown columns are ignored.
Corpus load_csv(const std::filesystem::path& path, const AttributeSchema& schema = AttributeSchema::route_attributes());
void write_csv(const std::filesystem::path& path, const Corpus& corpus);

// JSON sidecar with schema constants, split seed, assignment and normalization.
std::filesystem::path metadata_path(const std::filesystem::path& csv_path);
void write_metadata(const std::filesystem::path& path, const Corpus& corpus);
// Restores split and normalization into a corpus loaded from the matching CSV.
void read_metadata(const std::filesystem::path& path, Corpus& corpus);

// CSV plus sidecar when the sidecar exists.
Corpus load_corpus(const std::filesystem::path& csv_path);
void save_corpus(const std::filesystem::path& csv_path, const Corpus& corpus);

}  // namespace iapgev::data
