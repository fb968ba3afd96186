#pragma once

#include <string>
#include <vector>

namespace dlo {

enum class InstructionKind { implicit, fixed_spatial, fixed_attribute };

struct Instruction {
    InstructionKind kind = InstructionKind::implicit;
    std::vector<std::string> tokens;  // ordered; empty for implicit
    std::string text;
};

/// Closed grammar over a small vocabulary. Colors: red green blue yellow.
/// Spatial: leftmost middle rightmost top bottom front back. Any word outside
/// the vocabulary (after stopwords) raises ParseError naming the token.
Instruction parse_instruction(const std::string& text);

}  // namespace dlo
