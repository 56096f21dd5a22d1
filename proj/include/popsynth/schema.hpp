#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace popsynth {

enum class Layer { SocioDemographic, Motivational };

enum class AttrType { Main, Household, Network, Values, Ideologies, Opinions, VitalPriorities };

enum class SourceKind { Micro, Macro };

std::string to_string(Layer l);
std::string to_string(AttrType t);
std::string to_string(SourceKind k);
Layer layer_from_string(const std::string& s);
AttrType attr_type_from_string(const std::string& s);
SourceKind source_kind_from_string(const std::string& s);

// One profile variable with its ordered state set.
struct AttributeDef {
    std::string name;
    std::vector<std::string> states;
    Layer layer = Layer::SocioDemographic;
    AttrType attr_type = AttrType::Main;
    bool ordinal = false;
    bool territorial = false;

    int cardinality() const { return static_cast<int>(states.size()); }

    bool operator==(const AttributeDef&) const = default;
};

struct DataSourceDescriptor {
    std::string id;
    SourceKind kind = SourceKind::Micro;
    std::vector<std::string> attributes;
    std::optional<std::string> weight_column;
    bool is_richest = false;
    std::string scope;
    std::optional<int> year;

    bool operator==(const DataSourceDescriptor&) const = default;
};

struct CoreSpec {
    std::vector<std::string> core_attributes;

    bool operator==(const CoreSpec&) const = default;
};

// Immutable attribute universe shared by the whole pipeline. Validated on
// construction; safe to share read-only across threads.
class Schema {
public:
    Schema(std::vector<AttributeDef> attributes, std::vector<DataSourceDescriptor> sources,
           CoreSpec core);

    const std::vector<AttributeDef>& attributes() const { return attributes_; }
    const std::vector<DataSourceDescriptor>& sources() const { return sources_; }
    const CoreSpec& core() const { return core_; }

    bool has_attribute(const std::string& name) const;
    const AttributeDef& attribute(const std::string& name) const;
    int attribute_index(const std::string& name) const;

    // Index of a state label within an attribute, or -1 when not declared.
    int state_index(const std::string& attribute, const std::string& label) const;

    bool has_source(const std::string& id) const;
    const DataSourceDescriptor& source(const std::string& id) const;
    const DataSourceDescriptor& richest_source() const;

    std::optional<std::string> territorial_attribute() const;
    bool is_core(const std::string& attribute) const;

    bool operator==(const Schema& other) const;

private:
    void validate() const;

    std::vector<AttributeDef> attributes_;
    std::vector<DataSourceDescriptor> sources_;
    CoreSpec core_;
    std::unordered_map<std::string, int> attr_index_;
};

Schema load_schema(const std::string& path);
void save_schema(const Schema& schema, const std::string& path);

// Built-in schema mirroring the Barcelona attribute universe: socio-demographic
// main/household/network attributes plus motivational values, ideologies,
// opinions and vital priorities, with the five-source inventory.
Schema default_barcelona_schema();

}  // namespace popsynth
