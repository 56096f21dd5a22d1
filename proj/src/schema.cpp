#include "popsynth/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "popsynth/errors.hpp"

namespace popsynth {

using nlohmann::ordered_json;

std::string to_string(Layer l) {
    return l == Layer::SocioDemographic ? "socio-demographic" : "motivational";
}

std::string to_string(AttrType t) {
    switch (t) {
        case AttrType::Main: return "main";
        case AttrType::Household: return "household";
        case AttrType::Network: return "network";
        case AttrType::Values: return "values";
        case AttrType::Ideologies: return "ideologies";
        case AttrType::Opinions: return "opinions";
        case AttrType::VitalPriorities: return "vital-priorities";
    }
    return "main";
}

std::string to_string(SourceKind k) { return k == SourceKind::Micro ? "micro" : "macro"; }

Layer layer_from_string(const std::string& s) {
    if (s == "socio-demographic") return Layer::SocioDemographic;
    if (s == "motivational") return Layer::Motivational;
    throw ParseError("unknown layer: '" + s + "'");
}

AttrType attr_type_from_string(const std::string& s) {
    if (s == "main") return AttrType::Main;
    if (s == "household") return AttrType::Household;
    if (s == "network") return AttrType::Network;
    if (s == "values") return AttrType::Values;
    if (s == "ideologies") return AttrType::Ideologies;
    if (s == "opinions") return AttrType::Opinions;
    if (s == "vital-priorities") return AttrType::VitalPriorities;
    throw ParseError("unknown attribute type: '" + s + "'");
}

SourceKind source_kind_from_string(const std::string& s) {
    if (s == "micro") return SourceKind::Micro;
    if (s == "macro") return SourceKind::Macro;
    throw ParseError("unknown source kind: '" + s + "'");
}

Schema::Schema(std::vector<AttributeDef> attributes, std::vector<DataSourceDescriptor> sources,
               CoreSpec core)
    : attributes_(std::move(attributes)), sources_(std::move(sources)), core_(std::move(core)) {
    for (int i = 0; i < static_cast<int>(attributes_.size()); ++i) {
        attr_index_[attributes_[i].name] = i;
    }
    validate();
}

void Schema::validate() const {
    if (attr_index_.size() != attributes_.size()) {
        throw ValidationError("schema: duplicate attribute name");
    }
    int territorial_count = 0;
    for (const auto& a : attributes_) {
        if (a.name.empty()) throw ValidationError("schema: attribute with empty name");
        if (a.states.size() < 2) {
            throw ValidationError("schema: attribute '" + a.name + "' needs at least 2 states");
        }
        std::unordered_set<std::string> seen;
        for (const auto& s : a.states) {
            if (s.empty()) {
                throw ValidationError("schema: attribute '" + a.name + "' has an empty state label");
            }
            if (!seen.insert(s).second) {
                throw ValidationError("schema: attribute '" + a.name + "' has duplicate state '" +
                                      s + "'");
            }
        }
        if (a.territorial) ++territorial_count;
    }
    if (territorial_count > 1) {
        throw ValidationError("schema: more than one territorial attribute");
    }

    std::unordered_set<std::string> source_ids;
    int richest_count = 0;
    for (const auto& ds : sources_) {
        if (ds.id.empty()) throw ValidationError("schema: source with empty id");
        if (!source_ids.insert(ds.id).second) {
            throw ValidationError("schema: duplicate source id '" + ds.id + "'");
        }
        if (ds.attributes.empty()) {
            throw ValidationError("schema: source '" + ds.id + "' declares no attributes");
        }
        for (const auto& name : ds.attributes) {
            if (!attr_index_.count(name)) {
                throw ValidationError("schema: source '" + ds.id + "' references unknown attribute '" +
                                      name + "'");
            }
        }
        if (ds.kind == SourceKind::Macro && ds.weight_column) {
            throw ValidationError("schema: macro source '" + ds.id + "' cannot carry a weight column");
        }
        if (ds.is_richest) {
            ++richest_count;
            if (ds.kind != SourceKind::Micro) {
                throw ValidationError("schema: richest source '" + ds.id + "' must be micro");
            }
        }
    }
    if (!sources_.empty() && richest_count != 1) {
        throw ValidationError("schema: exactly one source must be marked richest (found " +
                              std::to_string(richest_count) + ")");
    }

    if (!sources_.empty() && core_.core_attributes.empty()) {
        throw ValidationError("schema: core attribute set is empty");
    }
    for (const auto& name : core_.core_attributes) {
        if (!attr_index_.count(name)) {
            throw ValidationError("schema: core attribute '" + name + "' is not declared");
        }
        for (const auto& ds : sources_) {
            if (std::find(ds.attributes.begin(), ds.attributes.end(), name) ==
                ds.attributes.end()) {
                throw ValidationError("schema: core attribute '" + name + "' absent from source '" +
                                      ds.id + "'");
            }
        }
    }
}

bool Schema::has_attribute(const std::string& name) const { return attr_index_.count(name) > 0; }

const AttributeDef& Schema::attribute(const std::string& name) const {
    auto it = attr_index_.find(name);
    if (it == attr_index_.end()) throw ValidationError("schema: unknown attribute '" + name + "'");
    return attributes_[it->second];
}

int Schema::attribute_index(const std::string& name) const {
    auto it = attr_index_.find(name);
    if (it == attr_index_.end()) throw ValidationError("schema: unknown attribute '" + name + "'");
    return it->second;
}

int Schema::state_index(const std::string& attribute_name, const std::string& label) const {
    const auto& a = attribute(attribute_name);
    auto it = std::find(a.states.begin(), a.states.end(), label);
    if (it == a.states.end()) return -1;
    return static_cast<int>(it - a.states.begin());
}

bool Schema::has_source(const std::string& id) const {
    return std::any_of(sources_.begin(), sources_.end(),
                       [&](const auto& ds) { return ds.id == id; });
}

const DataSourceDescriptor& Schema::source(const std::string& id) const {
    for (const auto& ds : sources_) {
        if (ds.id == id) return ds;
    }
    throw ValidationError("schema: unknown source '" + id + "'");
}

const DataSourceDescriptor& Schema::richest_source() const {
    for (const auto& ds : sources_) {
        if (ds.is_richest) return ds;
    }
    throw ValidationError("schema: no source marked richest");
}

std::optional<std::string> Schema::territorial_attribute() const {
    for (const auto& a : attributes_) {
        if (a.territorial) return a.name;
    }
    return std::nullopt;
}

bool Schema::is_core(const std::string& attribute_name) const {
    const auto& c = core_.core_attributes;
    return std::find(c.begin(), c.end(), attribute_name) != c.end();
}

bool Schema::operator==(const Schema& other) const {
    return attributes_ == other.attributes_ && sources_ == other.sources_ && core_ == other.core_;
}

namespace {

AttributeDef attribute_from_json(const ordered_json& j) {
    AttributeDef a;
    a.name = j.at("name").get<std::string>();
    a.states = j.at("states").get<std::vector<std::string>>();
    a.layer = layer_from_string(j.at("layer").get<std::string>());
    a.attr_type = attr_type_from_string(j.at("type").get<std::string>());
    a.ordinal = j.value("ordinal", false);
    a.territorial = j.value("territorial", false);
    return a;
}

DataSourceDescriptor source_from_json(const ordered_json& j) {
    DataSourceDescriptor ds;
    ds.id = j.at("id").get<std::string>();
    ds.kind = source_kind_from_string(j.at("kind").get<std::string>());
    ds.attributes = j.at("attributes").get<std::vector<std::string>>();
    if (j.contains("weight_column") && !j.at("weight_column").is_null()) {
        ds.weight_column = j.at("weight_column").get<std::string>();
    }
    ds.is_richest = j.value("is_richest", false);
    ds.scope = j.value("scope", std::string{});
    if (j.contains("year") && !j.at("year").is_null()) {
        ds.year = j.at("year").get<int>();
    }
    return ds;
}

}  // namespace

Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("schema: cannot open '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("schema: malformed file '" + path + "': " + e.what());
    }
    try {
        std::vector<AttributeDef> attrs;
        for (const auto& aj : j.at("attributes")) attrs.push_back(attribute_from_json(aj));
        std::vector<DataSourceDescriptor> sources;
        if (j.contains("sources")) {
            for (const auto& sj : j.at("sources")) sources.push_back(source_from_json(sj));
        }
        CoreSpec core;
        if (j.contains("core")) core.core_attributes = j.at("core").get<std::vector<std::string>>();
        return Schema(std::move(attrs), std::move(sources), std::move(core));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("schema: malformed file '" + path + "': " + e.what());
    }
}

void save_schema(const Schema& schema, const std::string& path) {
    ordered_json j;
    j["attributes"] = ordered_json::array();
    for (const auto& a : schema.attributes()) {
        ordered_json aj;
        aj["name"] = a.name;
        aj["states"] = a.states;
        aj["layer"] = to_string(a.layer);
        aj["type"] = to_string(a.attr_type);
        aj["ordinal"] = a.ordinal;
        aj["territorial"] = a.territorial;
        j["attributes"].push_back(aj);
    }
    j["sources"] = ordered_json::array();
    for (const auto& ds : schema.sources()) {
        ordered_json sj;
        sj["id"] = ds.id;
        sj["kind"] = to_string(ds.kind);
        sj["attributes"] = ds.attributes;
        if (ds.weight_column) sj["weight_column"] = *ds.weight_column;
        sj["is_richest"] = ds.is_richest;
        sj["scope"] = ds.scope;
        if (ds.year) sj["year"] = *ds.year;
        j["sources"].push_back(sj);
    }
    j["core"] = schema.core().core_attributes;

    std::ofstream out(path);
    if (!out) throw Error("schema: cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

namespace {

std::vector<std::string> numeric_states(int lo, int hi) {
    std::vector<std::string> s;
    for (int i = lo; i <= hi; ++i) s.push_back(std::to_string(i));
    return s;
}

AttributeDef make_attr(std::string name, std::vector<std::string> states, Layer layer,
                       AttrType type, bool ordinal, bool territorial = false) {
    return AttributeDef{std::move(name), std::move(states), layer, type, ordinal, territorial};
}

}  // namespace

Schema default_barcelona_schema() {
    const Layer SD = Layer::SocioDemographic;
    const Layer MO = Layer::Motivational;
    std::vector<AttributeDef> attrs;

    // Main socio-demographic attributes.
    attrs.push_back(make_attr("District",
                              {"Ciutat Vella", "Eixample", "Sants-Montjuic", "Les Corts",
                               "Sarria-Sant Gervasi", "Gracia", "Horta-Guinardo", "Nou Barris",
                               "Sant Andreu", "Sant Marti"},
                              SD, AttrType::Main, false, true));
    attrs.push_back(make_attr("Gender", {"female", "male"}, SD, AttrType::Main, false));
    attrs.push_back(make_attr(
        "Age", {"15-24", "25-34", "35-44", "45-54", "55-64", "65-74"}, SD, AttrType::Main, true));
    attrs.push_back(make_attr("Nationality", {"Spain", "rest of EU", "rest of the world"}, SD,
                              AttrType::Main, false));
    attrs.push_back(make_attr("Educational level",
                              {"no studies", "primary", "secondary", "post-secondary", "university"},
                              SD, AttrType::Main, true));
    attrs.push_back(make_attr("Unemployment", {"employed", "unemployed"}, SD, AttrType::Main, false));
    attrs.push_back(make_attr("Income", {"0-999", "1000-1999", "2000-2999", "3000+"}, SD,
                              AttrType::Main, true));

    // Household.
    attrs.push_back(make_attr("Hr", {"0", "1", "2", "3", "4+"}, SD, AttrType::Household, true));
    attrs.push_back(
        make_attr("Ch", {"none", "one-or-more"}, SD, AttrType::Household, false));

    // Network: number of friends plus per-friend-slot demographic attributes.
    attrs.push_back(make_attr("Fr", {"0", "1", "2", "3+"}, SD, AttrType::Network, true));
    for (int f = 1; f <= 3; ++f) {
        const std::string suffix = "_friend" + std::to_string(f);
        attrs.push_back(make_attr("Gender" + suffix, {"female", "male"}, SD, AttrType::Network, false));
        attrs.push_back(make_attr("Age" + suffix,
                                  {"15-24", "25-34", "35-44", "45-54", "55-64", "65-74"}, SD,
                                  AttrType::Network, true));
        attrs.push_back(make_attr(
            "Educational level" + suffix,
            {"no studies", "primary", "secondary", "post-secondary", "university"}, SD,
            AttrType::Network, true));
        attrs.push_back(make_attr("Nationality" + suffix,
                                  {"Spain", "rest of EU", "rest of the world"}, SD,
                                  AttrType::Network, false));
    }

    // Values: Inglehart's MPM index and Schwartz's ten fundamental values.
    attrs.push_back(make_attr("MPM index", numeric_states(1, 7), MO, AttrType::Values, true));
    for (const char* v : {"benevolence", "universalism", "self-direction", "stimulation", "hedonism",
                          "achievement", "power", "security", "conformity", "tradition"}) {
        attrs.push_back(make_attr(std::string("Schwartz ") + v, numeric_states(1, 5), MO,
                                  AttrType::Values, true));
    }

    // Ideologies: political spectrum plus alignment scales.
    attrs.push_back(make_attr("Ideology", numeric_states(1, 8), MO, AttrType::Ideologies, true));
    attrs.push_back(
        make_attr("Ideology parents", numeric_states(1, 8), MO, AttrType::Ideologies, true));
    for (const char* topic : {"capitalism", "socialism", "communism", "independence", "feminism",
                              "ecologism", "multiculturalism", "religion"}) {
        attrs.push_back(make_attr(std::string("Alignment ") + topic, numeric_states(1, 3), MO,
                                  AttrType::Ideologies, true));
    }

    // Opinions: interest, views on controversial topics, confidence.
    for (const char* topic : {"politics", "sports", "culture", "economy"}) {
        attrs.push_back(make_attr(std::string("Interest ") + topic, numeric_states(1, 4), MO,
                                  AttrType::Opinions, true));
    }
    for (const char* topic : {"immigration", "squatting", "sustainability"}) {
        attrs.push_back(make_attr(std::string("View ") + topic,
                                  {"in favour", "neutral", "against"}, MO, AttrType::Opinions,
                                  false));
    }
    for (const char* inst : {"police", "state", "government", "church", "people", "monarchy"}) {
        attrs.push_back(make_attr(std::string("Confidence ") + inst, numeric_states(1, 4), MO,
                                  AttrType::Opinions, true));
    }

    // Vital priorities.
    for (const char* aspect : {"family", "friends", "work", "personal time", "studies"}) {
        attrs.push_back(make_attr(std::string("Priority ") + aspect, numeric_states(1, 10), MO,
                                  AttrType::VitalPriorities, true));
    }

    // Regional aggregated motivational attributes (collective level).
    attrs.push_back(
        make_attr("Regional MPM index", numeric_states(1, 7), MO, AttrType::Values, true));
    attrs.push_back(
        make_attr("Regional ideology", numeric_states(1, 8), MO, AttrType::Ideologies, true));
    attrs.push_back(make_attr("Regional confidence institutions", numeric_states(1, 4), MO,
                              AttrType::Opinions, true));

    const std::vector<std::string> core = {"District", "Gender", "Age", "Nationality"};

    auto with_core = [&](std::vector<std::string> extra) {
        std::vector<std::string> all = core;
        all.insert(all.end(), extra.begin(), extra.end());
        return all;
    };

    std::vector<DataSourceDescriptor> sources;
    sources.push_back(DataSourceDescriptor{"ds1", SourceKind::Macro, with_core({"Income"}),
                                           std::nullopt, false, "Neighborhood", 2022});
    sources.push_back(DataSourceDescriptor{
        "ds2", SourceKind::Micro,
        with_core({"Educational level", "Unemployment", "Hr", "Ch"}), std::nullopt, true,
        "Municipality", 2011});
    {
        std::vector<std::string> net = {"Fr"};
        for (int f = 1; f <= 3; ++f) {
            const std::string suffix = "_friend" + std::to_string(f);
            net.push_back("Gender" + suffix);
            net.push_back("Age" + suffix);
            net.push_back("Educational level" + suffix);
            net.push_back("Nationality" + suffix);
        }
        sources.push_back(DataSourceDescriptor{"ds3", SourceKind::Micro, with_core(net),
                                               std::nullopt, false, "Census section", 2012});
    }
    {
        std::vector<std::string> motiv = {"MPM index"};
        for (const char* v : {"benevolence", "universalism", "self-direction", "stimulation",
                              "hedonism", "achievement", "power", "security", "conformity",
                              "tradition"}) {
            motiv.push_back(std::string("Schwartz ") + v);
        }
        motiv.push_back("Ideology");
        motiv.push_back("Ideology parents");
        for (const char* t : {"capitalism", "socialism", "communism", "independence", "feminism",
                              "ecologism", "multiculturalism", "religion"}) {
            motiv.push_back(std::string("Alignment ") + t);
        }
        for (const char* t : {"politics", "sports", "culture", "economy"}) {
            motiv.push_back(std::string("Interest ") + t);
        }
        for (const char* t : {"immigration", "squatting", "sustainability"}) {
            motiv.push_back(std::string("View ") + t);
        }
        for (const char* t : {"police", "state", "government", "church", "people", "monarchy"}) {
            motiv.push_back(std::string("Confidence ") + t);
        }
        for (const char* t : {"family", "friends", "work", "personal time", "studies"}) {
            motiv.push_back(std::string("Priority ") + t);
        }
        sources.push_back(DataSourceDescriptor{"ds4", SourceKind::Micro, with_core(motiv),
                                               std::nullopt, false, "District", 2021});
    }
    sources.push_back(DataSourceDescriptor{
        "ds5", SourceKind::Micro,
        with_core({"Regional MPM index", "Regional ideology", "Regional confidence institutions"}),
        std::nullopt, false, "Region", 2023});

    return Schema(std::move(attrs), std::move(sources), CoreSpec{core});
}

}  // namespace popsynth
