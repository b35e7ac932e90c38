#pragma once

#include <stdexcept>
#include <utility>
#include <variant>

namespace forge {

// Minimal value-or-error holder until the toolchain ships std::expected.
template <class E>
struct Unexpected {
    E error;
};

template <class E>
Unexpected(E) -> Unexpected<E>;

class BadExpectedAccess : public std::logic_error {
public:
    BadExpectedAccess() : std::logic_error("accessed the value of an Expected holding an error") {}
};

template <class T, class E>
class Expected {
public:
    Expected(T value) : storage_(std::in_place_index<0>, std::move(value)) {}
    Expected(Unexpected<E> err) : storage_(std::in_place_index<1>, std::move(err.error)) {}

    bool has_value() const noexcept { return storage_.index() == 0; }
    explicit operator bool() const noexcept { return has_value(); }

    const T& value() const& {
        if (!has_value()) throw BadExpectedAccess();
        return std::get<0>(storage_);
    }
    T& value() & {
        if (!has_value()) throw BadExpectedAccess();
        return std::get<0>(storage_);
    }
    T&& value() && {
        if (!has_value()) throw BadExpectedAccess();
        return std::get<0>(std::move(storage_));
    }

    const E& error() const& { return std::get<1>(storage_); }

    const T& operator*() const& { return value(); }
    T& operator*() & { return value(); }
    const T* operator->() const { return &value(); }
    T* operator->() { return &value(); }

private:
    std::variant<T, E> storage_;
};

}  // namespace forge
