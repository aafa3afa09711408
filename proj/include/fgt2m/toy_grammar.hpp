#pragma once

#include "fgt2m/conllu.hpp"
#include "fgt2m/rng.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fgt2m {

enum class Action { Walk, Wave, Jump, Turn };
enum class Direction { Forward, Backward, None };
enum class Side { Left, Right, None };
enum class Connective { While, Then, None };

// Attribute tuple behind every toy caption. Walk/jump captions carry a
// direction, wave/turn a side; a connective introduces a bare second action
// rendered without attributes.
struct ToyMotionSpec {
    Action action = Action::Walk;
    Direction direction = Direction::Forward;
    Side side = Side::None;
    int count = 1;
    Connective connective = Connective::None;
    std::optional<Action> second_action;

    void validate() const; // ContractError on invariant violations
    bool operator==(const ToyMotionSpec&) const = default;
    auto operator<=>(const ToyMotionSpec&) const = default;
};

const char* action_name(Action a);
const char* direction_name(Direction d);
const char* side_name(Side s);
const char* connective_name(Connective c);

// Deterministic caption language over four actions with per-template
// dependency skeletons, standing in for a statistical parser.
class ToyGrammar {
public:
    static ToyGrammar standard();

    std::string render(const ToyMotionSpec& spec) const;
    // Inverse of render; throws UnparseableCaptionError for foreign captions.
    ToyMotionSpec spec_of(const std::string& caption) const;
    DependencyParse parse(const std::string& caption, const RelationVocab& vocab) const;

    // Hierarchical draw: action, attribute, count, and connective are each
    // uniform, so every action appears with probability 1/4.
    ToyMotionSpec sample_spec(Rng& rng) const;

    const std::vector<ToyMotionSpec>& all_specs() const { return specs_; }
    std::vector<std::string> lexicon() const;

private:
    std::vector<ToyMotionSpec> specs_;
    std::map<std::string, ToyMotionSpec> by_caption_;
};

DependencyParse toy_parse(const std::string& caption, const ToyGrammar& grammar,
                          const RelationVocab& vocab);
std::pair<ToyMotionSpec, std::string> sample_spec(Rng& rng, const ToyGrammar& grammar);

// Second actions compatible with a primary (arm/heading-neutral signatures).
std::vector<Action> allowed_second_actions(Action primary);

} // namespace fgt2m
