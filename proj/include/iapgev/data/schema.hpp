#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace iapgev::data {

struct Attribute {
    std::string name;
    std::string unit;
    double mean;
    double std;

    bool operator==(const Attribute&) const = default;
};

// Ordered route attributes with reference normalization constants.
class AttributeSchema {
public:
    explicit AttributeSchema(std::vector<Attribute> attributes);

    // The nine route characteristic attributes with their published means
    // and standard deviations.
    static const AttributeSchema& route_attributes();

    std::size_t size() const noexcept { return attributes_.size(); }
    const Attribute& operator[](std::size_t i) const { return attributes_[i]; }
    const std::vector<Attribute>& attributes() const noexcept { return attributes_; }
    std::optional<std::size_t> index_of(const std::string& name) const;
    std::vector<std::string> names() const;

    bool operator==(const AttributeSchema&) const = default;

private:
    std::vector<Attribute> attributes_;
};

// Column positions inside AttributeSchema::route_attributes().
namespace route {
inline constexpr std::size_t intersection_time = 0;
inline constexpr std::size_t length_detour = 1;
inline constexpr std::size_t time_detour = 2;
inline constexpr std::size_t links_per_km = 3;
inline constexpr std::size_t city_node_share = 4;
inline constexpr std::size_t delay = 5;
inline constexpr std::size_t highway_share = 6;
inline constexpr std::size_t left_turn_share = 7;
inline constexpr std::size_t operating_cost = 8;
}  // namespace route

}  // namespace iapgev::data
