#include "iapgev/data/schema.hpp"

#include <set>

#include "iapgev/error.hpp"

namespace iapgev::data {

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes) : attributes_(std::move(attributes)) {
    if (attributes_.empty()) throw SchemaError("schema has no attributes");
    std::set<std::string> seen;
    for (const auto& a : attributes_) {
        if (!seen.insert(a.name).second) throw SchemaError("duplicate attribute name '" + a.name + "'");
        if (!(a.std > 0.0)) throw SchemaError("attribute '" + a.name + "' has non-positive standard deviation");
    }
}

const AttributeSchema& AttributeSchema::route_attributes() {
    static const AttributeSchema schema({
        {"Route average intersection time", "over all intersections", 0.18, 0.07},
        {"Route length detour", "ratio to shortest path length", 1.11, 0.21},
        {"Route time detour", "ratio to fastest path time", 1.08, 0.17},
        {"Route average number of links", "per km", 4.42, 2.21},
        {"Route city node percentage", "share of intersections in the city center", 0.10, 0.19},
        {"Route percentage delay", "ratio of delay to free-flow travel time", 1.85, 0.61},
        {"Route highway/expressway percentage", "share of total distance", 0.71, 0.29},
        {"Route left turn percentage", "share of intersections", 0.11, 0.09},
        {"Route average operating cost", "per km", 1.06, 0.39},
    });
    return schema;
}

std::optional<std::size_t> AttributeSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < attributes_.size(); ++i)
        if (attributes_[i].name == name) return i;
    return std::nullopt;
}

std::vector<std::string> AttributeSchema::names() const {
    std::vector<std::string> out;
    for (const auto& a : attributes_) out.push_back(a.name);
    return out;
}

}  // namespace iapgev::data
