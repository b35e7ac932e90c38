#pragma once

#include <string_view>
#include <vector>

#include "forge/kernel/tensor.hpp"

namespace forge::kernel {

// prior:     [vision, action queries, language]  (queries cannot see language)
// posterior: [vision, language, action queries]  (queries see both)
enum class Branch { prior, posterior };
enum class TokenKind { vision, language, action };

std::string_view to_string(Branch branch);

struct SequenceLayout {
    Branch branch = Branch::prior;
    int n_vision = 0;
    int n_language = 0;
    int n_action = 0;
    std::vector<TokenKind> order;  // token kind at each position
    Mask mask;                     // causal over `order`

    int length() const { return static_cast<int>(order.size()); }
    std::vector<int> positions(TokenKind kind) const;
};

SequenceLayout build_sequence(Branch branch, int n_vision, int n_language, int n_action);

}  // namespace forge::kernel
