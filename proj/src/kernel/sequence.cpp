#include "forge/kernel/sequence.hpp"

namespace forge::kernel {

std::string_view to_string(Branch branch) { return branch == Branch::prior ? "prior" : "posterior"; }

std::vector<int> SequenceLayout::positions(TokenKind kind) const {
    std::vector<int> out;
    for (int i = 0; i < length(); ++i) {
        if (order[static_cast<std::size_t>(i)] == kind) out.push_back(i);
    }
    return out;
}

SequenceLayout build_sequence(Branch branch, int n_vision, int n_language, int n_action) {
    if (n_vision < 1 || n_language < 1 || n_action < 1) {
        throw KernelError(KernelErrorCode::bad_argument, "build_sequence: all token counts must be >= 1");
    }
    SequenceLayout layout;
    layout.branch = branch;
    layout.n_vision = n_vision;
    layout.n_language = n_language;
    layout.n_action = n_action;

    auto append = [&](TokenKind kind, int n) { layout.order.insert(layout.order.end(), static_cast<std::size_t>(n), kind); };
    append(TokenKind::vision, n_vision);
    if (branch == Branch::prior) {
        append(TokenKind::action, n_action);
        append(TokenKind::language, n_language);
    } else {
        append(TokenKind::language, n_language);
        append(TokenKind::action, n_action);
    }

    const int n = layout.length();
    layout.mask = Mask(n, n, std::uint8_t{0});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) layout.mask(i, j) = 1;
    }
    return layout;
}

}  // namespace forge::kernel
