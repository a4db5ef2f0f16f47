#pragma once

// Intralingual specification markers.
//
// Each marker is collected by irs::conformance::collect() into the assertion
// manifest and re-checked at source level by irs::conformance::check(). The two
// kinds C++ can decide at compile time also expand to static_asserts.

#include <type_traits>

#define IRS_CONFORM_NOT_DUPLICABLE(Type)                                                           \
    static_assert(!std::is_copy_constructible_v<Type> && !std::is_copy_assignable_v<Type>,        \
                  #Type " must not be duplicable")

// Place inside the class body, after the field declaration.
#define IRS_CONFORM_COMPOSED_OF(Type, field, Inner)                                                \
    static_assert(std::is_same_v<decltype(field), Inner>, #Type "::" #field " must be " #Inner)

#define IRS_CONFORM_FIELDS_PRIVATE(Type, ...) static_assert(true, #Type)

#define IRS_CONFORM_NO_MUTATES(Function, ...) static_assert(true, #Function)

#define IRS_CONFORM_NO_CALLS(Function, ...) static_assert(true, #Function)
