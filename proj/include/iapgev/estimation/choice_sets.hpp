#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "iapgev/data/corpus.hpp"
#include "iapgev/estimation/likelihood.hpp"

namespace iapgev::estimation {

// Generated choice sets with the partition of the corpus row each one came
// from. Stored as CSV with one line per alternative:
//   observation,partition,alternative,chosen,<attributes...>[,log_bc][,alpha_0,...]
struct ChoiceSetTable {
    std::vector<std::string> attributes;
    Dataset observations;
    std::vector<data::Partition> partition;

    Dataset select(data::Partition p) const;
};

void write_choice_sets(const std::filesystem::path& path, const ChoiceSetTable& table);
// The ln BC and alpha columns are optional; observations lack them when absent.
ChoiceSetTable read_choice_sets(const std::filesystem::path& path);

}  // namespace iapgev::estimation
