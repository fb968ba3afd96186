#include "dlo/instruction.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "dlo/errors.hpp"

namespace dlo {

namespace {

const std::set<std::string> kColors = {"red", "green", "blue", "yellow"};
const std::set<std::string> kSpatial = {"leftmost", "middle",  "rightmost", "top",
                                        "bottom",   "front",   "back"};
const std::set<std::string> kStopwords = {
    "route",   "the",  "cable", "rope",  "dlo",   "wire", "through", "then",
    "clip",    "clips","a",     "an",    "and",   "in",   "into",    "insert",
    "first",   "next", "finally","please","of",   "from", "to",      "it",
    "all",     "natural", "naturally", "order"};

std::vector<std::string> words_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isalpha(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

Instruction parse_instruction(const std::string& text) {
    Instruction ins;
    ins.text = text;

    bool saw_all = false, saw_natural = false;
    std::vector<std::string> colors, spatial;
    for (const auto& w : words_of(text)) {
        if (kColors.count(w)) {
            colors.push_back(w);
        } else if (kSpatial.count(w)) {
            spatial.push_back(w);
        } else if (kStopwords.count(w)) {
            if (w == "all") saw_all = true;
            if (w == "natural" || w == "naturally") saw_natural = true;
        } else {
            throw ParseError("instruction: unknown token '" + w + "'");
        }
    }

    if (!colors.empty() && !spatial.empty())
        throw ParseError("instruction: mixes color and spatial terms");
    if (!colors.empty()) {
        ins.kind = InstructionKind::fixed_attribute;
        ins.tokens = colors;
        return ins;
    }
    if (!spatial.empty()) {
        ins.kind = InstructionKind::fixed_spatial;
        ins.tokens = spatial;
        return ins;
    }
    if (saw_all || saw_natural) {
        ins.kind = InstructionKind::implicit;
        return ins;
    }
    throw ParseError("instruction: no routing directive found in '" + text + "'");
}

}  // namespace dlo
