#include "fgt2m/toy_grammar.hpp"
#include "fgt2m/embedding.hpp"

#include <algorithm>

namespace fgt2m {

namespace {

const char* verb_3sg(Action a) {
    switch (a) {
        case Action::Walk: return "walks";
        case Action::Wave: return "waves";
        case Action::Jump: return "jumps";
        case Action::Turn: return "turns";
    }
    return "";
}

const char* verb_gerund(Action a) {
    switch (a) {
        case Action::Walk: return "walking";
        case Action::Wave: return "waving";
        case Action::Jump: return "jumping";
        case Action::Turn: return "turning";
    }
    return "";
}

const char* count_word(int count) {
    switch (count) {
        case 2: return "two";
        case 3: return "three";
        case 4: return "four";
        default: return "";
    }
}

bool directional(Action a) { return a == Action::Walk || a == Action::Jump; }
bool sided(Action a) { return a == Action::Wave || a == Action::Turn; }

} // namespace

const char* action_name(Action a) { return verb_3sg(a); }
const char* direction_name(Direction d) {
    return d == Direction::Forward ? "forward" : d == Direction::Backward ? "backward" : "none";
}
const char* side_name(Side s) { return s == Side::Left ? "left" : s == Side::Right ? "right" : "none"; }
const char* connective_name(Connective c) {
    return c == Connective::While ? "while" : c == Connective::Then ? "then" : "none";
}

std::vector<Action> allowed_second_actions(Action primary) {
    std::vector<Action> out;
    for (Action a : {Action::Wave, Action::Jump, Action::Turn})
        if (a != primary) out.push_back(a);
    return out;
}

void ToyMotionSpec::validate() const {
    if (count < 1 || count > 4) throw ContractError("spec count must be in 1..4");
    if (sided(action) != (side != Side::None))
        throw ContractError("side must be set exactly for sided actions (wave, turn)");
    if (directional(action) != (direction != Direction::None))
        throw ContractError("direction must be set exactly for directional actions (walk, jump)");
    if ((connective != Connective::None) != second_action.has_value())
        throw ContractError("a connective requires a second action and vice versa");
    if (second_action) {
        const auto allowed = allowed_second_actions(action);
        if (std::find(allowed.begin(), allowed.end(), *second_action) == allowed.end())
            throw ContractError("second action must be an arm/heading-neutral action distinct from the primary");
    }
}

std::string ToyGrammar::render(const ToyMotionSpec& spec) const {
    spec.validate();
    std::string s = "a person ";
    s += verb_3sg(spec.action);
    if (directional(spec.action)) {
        s += " ";
        s += direction_name(spec.direction);
    } else if (spec.action == Action::Wave) {
        s += " the ";
        s += side_name(spec.side);
        s += " hand";
    } else {
        s += " ";
        s += side_name(spec.side);
    }
    if (spec.count > 1) {
        s += " ";
        s += count_word(spec.count);
        s += " times";
    }
    if (spec.connective == Connective::While) {
        s += " while ";
        s += verb_gerund(*spec.second_action);
    } else if (spec.connective == Connective::Then) {
        s += " then ";
        s += verb_3sg(*spec.second_action);
    }
    return s;
}

ToyGrammar ToyGrammar::standard() {
    ToyGrammar g;
    auto emit = [&](const ToyMotionSpec& spec) {
        g.specs_.push_back(spec);
        g.by_caption_[g.render(spec)] = spec;
    };
    for (Action action : {Action::Walk, Action::Wave, Action::Jump, Action::Turn}) {
        std::vector<ToyMotionSpec> bases;
        for (int attr = 0; attr < 2; ++attr) {
            ToyMotionSpec s;
            s.action = action;
            if (directional(action)) {
                s.direction = attr == 0 ? Direction::Forward : Direction::Backward;
                s.side = Side::None;
            } else {
                s.side = attr == 0 ? Side::Left : Side::Right;
                s.direction = Direction::None;
            }
            bases.push_back(s);
        }
        for (const auto& base : bases) {
            for (int count = 1; count <= 4; ++count) {
                ToyMotionSpec s = base;
                s.count = count;
                emit(s);
                for (Connective conn : {Connective::While, Connective::Then}) {
                    for (Action second : allowed_second_actions(action)) {
                        ToyMotionSpec sc = s;
                        sc.connective = conn;
                        sc.second_action = second;
                        emit(sc);
                    }
                }
            }
        }
    }
    return g;
}

ToyMotionSpec ToyGrammar::spec_of(const std::string& caption) const {
    auto it = by_caption_.find(caption);
    if (it == by_caption_.end())
        throw UnparseableCaptionError("caption was not produced by the toy grammar: \"" + caption + "\"");
    return it->second;
}

DependencyParse ToyGrammar::parse(const std::string& caption, const RelationVocab& vocab) const {
    const ToyMotionSpec spec = spec_of(caption);
    DependencyParse p;
    auto add = [&](const std::string& form, const char* upos, int head, const char* deprel) {
        ParsedToken tok;
        tok.form = form;
        tok.upos_id = vocab.upos_id(upos);
        tok.head = head;
        tok.deprel_id = vocab.relation_id(deprel);
        p.tokens.push_back(std::move(tok));
        return static_cast<int>(p.tokens.size()) - 1;
    };

    add("a", "DET", 1, "det");           // -> person
    add("person", "NOUN", 2, "nsubj");   // -> verb
    const int verb = add(verb_3sg(spec.action), "VERB", -1, "root");
    if (directional(spec.action)) {
        add(direction_name(spec.direction), "ADV", verb, "advmod");
    } else if (spec.action == Action::Wave) {
        const int hand = verb + 3;
        add("the", "DET", hand, "det");
        add(side_name(spec.side), "ADJ", hand, "amod");
        add("hand", "NOUN", verb, "obj");
    } else {
        add(side_name(spec.side), "ADV", verb, "advmod");
    }
    if (spec.count > 1) {
        const int times = static_cast<int>(p.tokens.size()) + 1;
        add(count_word(spec.count), "NUM", times, "nummod");
        add("times", "NOUN", verb, "obl");
    }
    if (spec.connective == Connective::While) {
        const int gerund = static_cast<int>(p.tokens.size()) + 1;
        add("while", "SCONJ", gerund, "mark");
        add(verb_gerund(*spec.second_action), "VERB", verb, "advcl");
    } else if (spec.connective == Connective::Then) {
        const int verb2 = static_cast<int>(p.tokens.size()) + 1;
        add("then", "ADV", verb2, "advmod");
        add(verb_3sg(*spec.second_action), "VERB", verb, "conj");
    }
    p.validate();
    return p;
}

ToyMotionSpec ToyGrammar::sample_spec(Rng& rng) const {
    ToyMotionSpec s;
    s.action = static_cast<Action>(rng.uniform_int(0, 3));
    if (directional(s.action)) {
        s.direction = rng.uniform_int(0, 1) == 0 ? Direction::Forward : Direction::Backward;
        s.side = Side::None;
    } else {
        s.side = rng.uniform_int(0, 1) == 0 ? Side::Left : Side::Right;
        s.direction = Direction::None;
    }
    s.count = rng.uniform_int(1, 4);
    const int conn = rng.uniform_int(0, 2);
    if (conn > 0) {
        s.connective = conn == 1 ? Connective::While : Connective::Then;
        const auto allowed = allowed_second_actions(s.action);
        s.second_action = allowed[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(allowed.size()) - 1))];
    }
    s.validate();
    return s;
}

std::vector<std::string> ToyGrammar::lexicon() const {
    std::vector<std::string> words;
    auto push_unique = [&](const std::string& w) {
        if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
    };
    for (const auto& spec : specs_)
        for (const auto& tok : tokenize(render(spec))) push_unique(tok);
    return words;
}

DependencyParse toy_parse(const std::string& caption, const ToyGrammar& grammar,
                          const RelationVocab& vocab) {
    return grammar.parse(caption, vocab);
}

std::pair<ToyMotionSpec, std::string> sample_spec(Rng& rng, const ToyGrammar& grammar) {
    const ToyMotionSpec spec = grammar.sample_spec(rng);
    return {spec, grammar.render(spec)};
}

} // namespace fgt2m
