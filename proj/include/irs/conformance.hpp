#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace irs::conformance {

enum class Kind { NotDuplicable, FieldsPrivate, ComposedOf, NoMutates, NoCalls };

const char* to_string(Kind kind) noexcept;
Kind kind_from_string(const std::string& text);

struct Location {
    std::string file;
    std::size_t line = 0;

    friend bool operator==(const Location&, const Location&) = default;
};

/// One declarative claim. `item` is a type or function name as written in
/// the source; `args` are field names, an inner type, or callee names.
struct Assertion {
    Kind kind{};
    std::string item;
    std::vector<std::string> args;
    Location location;

    /// "KIND item args..." without location.
    [[nodiscard]] std::string key() const;
};

/// Source files by path relative to the root, contents verbatim.
using Codebase = std::map<std::string, std::string>;

/// Reads include/, src/ and tools/ (.hpp, .h, .cpp) under `root`.
Codebase load_codebase(const std::filesystem::path& root);

/// Every marker macro in the codebase, sorted by key then location.
std::vector<Assertion> collect(const Codebase& code);

/// One line per assertion: "KIND item args...  file:line".
std::string format_collection(const std::vector<Assertion>& assertions);

/// Manifest: one assertion per line, `KIND item [args...]`; '#' starts a comment.
std::vector<Assertion> parse_manifest(const std::string& text);

struct Result {
    Assertion assertion;
    bool pass = false;
    std::string diagnostic;
};

struct Report {
    std::vector<Result> results;

    [[nodiscard]] bool pass() const noexcept;
    [[nodiscard]] std::size_t failures() const noexcept;
    /// "PASS|FAIL KIND item args... @ file:line[ -- diagnostic]".
    [[nodiscard]] std::string format() const;
};

/// Checks each assertion at source level. Throws UnknownItem when an
/// assertion names a type or function that does not exist.
Report check(const std::vector<Assertion>& manifest, const Codebase& code);

/// A single text edit plus the assertion it is expected to break.
struct Mutation {
    std::string name;
    std::string file;
    std::string find;
    std::string replace;
    std::string expect; // Assertion::key() of the assertion that must fail
};

/// Format:
///   name <text>
///   file <path>
///   expect <KIND item args...>
///   --- find
///   <lines>
///   --- replace
///   <lines>
Mutation parse_mutation(const std::string& text);

/// Applies the edit. Throws NotFound unless `find` occurs exactly once.
Codebase apply(const Codebase& code, const Mutation& mutation);

struct MutationOutcome {
    std::string name;
    bool killed = false; // the expected assertion failed
    std::string detail;
};

MutationOutcome run_mutation(const std::vector<Assertion>& manifest, const Codebase& code, const Mutation& mutation);

} // namespace irs::conformance
