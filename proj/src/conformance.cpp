#include "irs/conformance.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>

#include "irs/error.hpp"

namespace irs::conformance {

namespace fs = std::filesystem;

namespace {

// Blanks comments and literal contents, keeping offsets and newlines.
std::string strip(const std::string& in) {
    std::string out = in;
    std::size_t i = 0;
    const std::size_t n = in.size();
    auto blank = [&](std::size_t from, std::size_t to) {
        for (std::size_t k = from; k < to && k < n; ++k) {
            if (out[k] != '\n') {
                out[k] = ' ';
            }
        }
    };
    while (i < n) {
        if (in.compare(i, 2, "//") == 0) {
            const std::size_t e = in.find('\n', i);
            const std::size_t stop = e == std::string::npos ? n : e;
            blank(i, stop);
            i = stop;
        } else if (in.compare(i, 2, "/*") == 0) {
            const std::size_t e = in.find("*/", i + 2);
            const std::size_t stop = e == std::string::npos ? n : e + 2;
            blank(i, stop);
            i = stop;
        } else if (in[i] == '"' || (in[i] == '\'' && (i == 0 || !std::isalnum(static_cast<unsigned char>(in[i - 1]))))) {
            const char q = in[i];
            std::size_t k = i + 1;
            while (k < n && in[k] != q && in[k] != '\n') {
                k += in[k] == '\\' ? 2 : 1;
            }
            blank(i + 1, k);
            i = k + 1;
        } else {
            ++i;
        }
    }
    return out;
}

std::size_t line_of(const std::string& text, std::size_t pos) {
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

std::string collapse(const std::string& s) {
    std::string out;
    bool space = false;
    for (const char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
        } else {
            if (space) {
                // No space around template brackets, scope, pointers or refs.
                const char prev = out.back();
                const bool tight = std::string("<>:*&,(").find(prev) != std::string::npos ||
                                   std::string("<>:*&,)").find(c) != std::string::npos;
                if (!tight) {
                    out += ' ';
                }
            }
            out += c;
            space = false;
        }
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string escape(const std::string& s) {
    static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
    return std::regex_replace(s, special, R"(\$&)");
}

// Index of the bracket matching the opener at `open`, or npos.
std::size_t match(const std::string& s, std::size_t open) {
    const char o = s[open];
    const char c = o == '(' ? ')' : o == '{' ? '}' : o == '[' ? ']' : '>';
    int depth = 0;
    for (std::size_t i = open; i < s.size(); ++i) {
        if (s[i] == o) {
            ++depth;
        } else if (s[i] == c && --depth == 0) {
            return i;
        }
    }
    return std::string::npos;
}

std::vector<std::string> split_args(const std::string& s) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (const char c : s) {
        if (c == '(' || c == '<' || c == '[' || c == '{') {
            ++depth;
        } else if (c == ')' || c == '>' || c == ']' || c == '}') {
            --depth;
        }
        if (c == ',' && depth == 0) {
            out.push_back(collapse(trim(cur)));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) {
        out.push_back(collapse(trim(cur)));
    }
    return out;
}

std::string last_component(const std::string& name) {
    int depth = 0;
    std::size_t cut = 0;
    for (std::size_t i = 0; i + 1 < name.size(); ++i) {
        if (name[i] == '<') {
            ++depth;
        } else if (name[i] == '>') {
            --depth;
        } else if (depth == 0 && name[i] == ':' && name[i + 1] == ':') {
            cut = i + 2;
        }
    }
    return name.substr(cut);
}

std::string base_name(const std::string& name) {
    const std::string last = last_component(name);
    return last.substr(0, last.find('<'));
}

struct Stripped {
    std::vector<std::pair<std::string, std::string>> files; // path, stripped text
};

Stripped strip_all(const Codebase& code) {
    Stripped s;
    for (const auto& [path, text] : code) {
        s.files.emplace_back(path, strip(text));
    }
    return s;
}

// ---- class bodies -------------------------------------------------------

enum class Access { Public, Protected, Private };

struct Member {
    std::string text; // collapsed
    Access access;
};

struct ClassBody {
    Location location;
    std::vector<Member> members;
};

std::vector<Member> members_of(const std::string& body, bool is_struct) {
    std::vector<Member> out;
    Access access = is_struct ? Access::Public : Access::Private;
    int depth = 0;
    int paren = 0;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
        const std::string t = collapse(trim(body.substr(start, end - start)));
        if (!t.empty()) {
            out.push_back({t, access});
        }
        start = end + 1;
    };
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '(') {
            ++paren;
        } else if (c == ')') {
            --paren;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0 && paren == 0) {
                std::size_t k = i + 1;
                while (k < body.size() && std::isspace(static_cast<unsigned char>(body[k]))) {
                    ++k;
                }
                if (k >= body.size() || body[k] != ';') {
                    emit(i + 1);
                }
            }
        } else if (c == ';' && depth == 0 && paren == 0) {
            emit(i);
        } else if (c == ':' && depth == 0 && paren == 0 && (i + 1 >= body.size() || body[i + 1] != ':') &&
                   (i == 0 || body[i - 1] != ':')) {
            const std::string label = trim(body.substr(start, i - start));
            if (label == "public" || label == "protected" || label == "private") {
                access = label == "public" ? Access::Public : label == "protected" ? Access::Protected : Access::Private;
                start = i + 1;
            }
        }
    }
    return out;
}

std::optional<ClassBody> find_class(const Stripped& code, const std::string& name) {
    auto search = [&](const std::string& n) -> std::optional<ClassBody> {
        const std::regex head("\\b(class|struct)\\s+" + escape(n) + R"(\s*(final\s*)?(:[^{;]*)?\{)");
        for (const auto& [path, text] : code.files) {
            std::smatch m;
            if (std::regex_search(text, m, head)) {
                const auto pos = static_cast<std::size_t>(m.position(0));
                const std::size_t open = pos + static_cast<std::size_t>(m.length(0)) - 1;
                const std::size_t close = match(text, open);
                if (close == std::string::npos) {
                    continue;
                }
                ClassBody body{{path, line_of(text, pos)},
                               members_of(text.substr(open + 1, close - open - 1), m[1] == "struct")};
                return body;
            }
        }
        return std::nullopt;
    };
    const std::string last = last_component(name);
    if (auto found = search(last)) {
        return found;
    }
    if (last.find('<') != std::string::npos) {
        return search(base_name(name));
    }
    return std::nullopt;
}

struct Field {
    std::string type;
    std::string name;
    Access access;
};

std::vector<Field> fields_of(const ClassBody& cls) {
    static const std::vector<std::string> skip = {"using",  "typedef", "friend", "template", "enum",
                                                  "struct", "class",   "union",  "static_assert"};
    std::vector<Field> out;
    for (const Member& m : cls.members) {
        const std::string& t = m.text;
        const std::string first = t.substr(0, t.find_first_of(" <(:"));
        if (std::find(skip.begin(), skip.end(), first) != skip.end() || t.rfind("IRS_", 0) == 0) {
            continue;
        }
        // Cut a default member initializer.
        int angle = 0;
        std::size_t cut = t.size();
        bool function = false;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const char c = t[i];
            if (c == '<') {
                ++angle;
            } else if (c == '>') {
                --angle;
            } else if (angle == 0 && c == '(') {
                function = true;
                break;
            } else if (angle == 0 && (c == '{' || (c == '=' && (i + 1 >= t.size() || t[i + 1] != '=')))) {
                cut = i;
                break;
            }
        }
        if (function) {
            continue;
        }
        const std::string head = trim(t.substr(0, cut));
        const std::vector<std::string> declarators = split_args(head);
        if (declarators.empty()) {
            continue;
        }
        static const std::regex last_ident(R"(([A-Za-z_]\w*)\s*$)");
        std::smatch lm;
        if (!std::regex_search(declarators[0], lm, last_ident)) {
            continue;
        }
        const std::string type = collapse(trim(declarators[0].substr(0, static_cast<std::size_t>(lm.position(1)))));
        if (type.empty()) {
            continue;
        }
        out.push_back({type, lm[1], m.access});
        for (std::size_t d = 1; d < declarators.size(); ++d) {
            out.push_back({type, trim(declarators[d]), m.access});
        }
    }
    return out;
}

// ---- function bodies ----------------------------------------------------

struct FunctionBody {
    Location location;
    std::string body;
};

std::vector<FunctionBody> find_function(const Stripped& code, const std::string& name) {
    auto search = [&](const std::string& n) {
        std::vector<FunctionBody> out;
        const std::regex head("(^|[^\\w:])(" + escape(n) + R"()\s*\()");
        for (const auto& [path, text] : code.files) {
            for (auto it = std::sregex_iterator(text.begin(), text.end(), head); it != std::sregex_iterator(); ++it) {
                const auto open = static_cast<std::size_t>(it->position(0) + it->length(0) - 1);
                const std::size_t close = match(text, open);
                if (close == std::string::npos) {
                    continue;
                }
                const std::size_t brace = text.find_first_of("{;", close + 1);
                if (brace == std::string::npos || text[brace] != '{') {
                    continue;
                }
                const std::string between = trim(text.substr(close + 1, brace - close - 1));
                const bool init_list = !between.empty() && between[0] == ':';
                if (!init_list && between.find_first_of("()=,") != std::string::npos &&
                    between.find("->") == std::string::npos) {
                    continue;
                }
                if (!init_list && between.find_first_of("()") != std::string::npos) {
                    continue;
                }
                const std::size_t end = match(text, brace);
                if (end == std::string::npos) {
                    continue;
                }
                out.push_back({{path, line_of(text, static_cast<std::size_t>(it->position(2)))},
                               text.substr(brace + 1, end - brace - 1)});
            }
        }
        return out;
    };
    auto found = search(name);
    if (found.empty() && last_component(name) != name) {
        found = search(last_component(name));
    }
    return found;
}

// Offset just past any chain of [..] and .at(..) after a name.
std::size_t skip_subscripts(const std::string& s, std::size_t pos) {
    for (;;) {
        std::size_t k = pos;
        while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) {
            ++k;
        }
        if (k < s.size() && s[k] == '[') {
            const std::size_t e = match(s, k);
            if (e == std::string::npos) {
                return pos;
            }
            pos = e + 1;
            continue;
        }
        static const std::regex at(R"(^\s*(\.|->)\s*at\s*\()");
        std::smatch m;
        const std::string rest = s.substr(k, 16);
        if (std::regex_search(rest, m, at)) {
            const std::size_t open = k + static_cast<std::size_t>(m.length(0)) - 1;
            const std::size_t e = match(s, open);
            if (e == std::string::npos) {
                return pos;
            }
            pos = e + 1;
            continue;
        }
        return pos;
    }
}

std::optional<std::string> find_mutation(const std::string& body, const std::string& field) {
    static const std::regex after(
        R"(^\s*(=(?!=)|\+=|-=|\*=|/=|%=|&=|\|=|\^=|<<=|>>=|\+\+|--|(\.|->)\s*(reset|emplace|emplace_back|emplace_front|push_back|pop_back|push_front|pop_front|insert|erase|clear|fill|swap|assign|resize)\s*\())");
    static const std::regex before(R"((\+\+|--|\bswap\s*\(|\bexchange\s*\()\s*(?:[\w\[\]]+\s*(?:\.|->)\s*)*$)");
    const std::regex name("(^|[^\\w])(" + escape(field) + ")(?!\\w)");
    for (auto it = std::sregex_iterator(body.begin(), body.end(), name); it != std::sregex_iterator(); ++it) {
        const auto p = static_cast<std::size_t>(it->position(2));
        const std::size_t e = skip_subscripts(body, p + field.size());
        const std::string tail = body.substr(e, 48);
        const std::string head = body.substr(p >= 64 ? p - 64 : 0, p >= 64 ? 64 : p);
        if (std::regex_search(tail, after) || std::regex_search(head, before)) {
            const std::size_t ls = body.rfind('\n', p);
            const std::size_t le = body.find('\n', p);
            return trim(body.substr(ls == std::string::npos ? 0 : ls + 1,
                                    (le == std::string::npos ? body.size() : le) - (ls == std::string::npos ? 0 : ls + 1)));
        }
    }
    return std::nullopt;
}

// ---- per-kind checks ----------------------------------------------------

bool has_marker(const std::vector<Assertion>& collected, const Assertion& a) {
    return std::any_of(collected.begin(), collected.end(), [&](const Assertion& c) { return c.key() == a.key(); });
}

[[noreturn]] void unknown(const Assertion& a, const char* what) {
    fail(Errc::UnknownItem, a.key() + ": no " + what + " named " + a.item);
}

Result check_one(const Assertion& a, const Stripped& code, const std::vector<Assertion>& collected) {
    Result r{a, true, {}};
    auto failing = [&](std::string why) {
        if (r.pass) {
            r.pass = false;
            r.diagnostic = std::move(why);
        }
    };
    switch (a.kind) {
    case Kind::NotDuplicable: {
        const auto cls = find_class(code, a.item);
        if (!cls) {
            unknown(a, "type");
        }
        r.assertion.location = cls->location;
        const std::string b = escape(base_name(a.item));
        const std::regex copy_ctor("^(explicit )?(constexpr )?" + b + R"(\(const )" + b + R"((<[^>]*>)?&\s*\w*\))");
        const std::regex copy_assign(R"((^|\s|&)operator=\(const )" + b + R"((<[^>]*>)?&)");
        const std::regex deleted(R"(=\s*delete\s*$)");
        const std::regex clone(R"((^|[\s&*])(clone|duplicate)\()");
        for (const Member& m : cls->members) {
            const bool copy = std::regex_search(m.text, copy_ctor) || std::regex_search(m.text, copy_assign);
            if (copy && !std::regex_search(m.text, deleted)) {
                failing("copy operation is not deleted: " + m.text.substr(0, 80));
            }
            if (std::regex_search(m.text, clone)) {
                failing("duplication method: " + m.text.substr(0, 80));
            }
        }
        if (!has_marker(collected, a)) {
            failing("no compile-time marker for " + a.item);
        }
        break;
    }
    case Kind::FieldsPrivate:
    case Kind::ComposedOf: {
        const auto cls = find_class(code, a.item);
        if (!cls) {
            unknown(a, "type");
        }
        r.assertion.location = cls->location;
        const std::vector<Field> fields = fields_of(*cls);
        auto field = [&](const std::string& n) -> const Field* {
            const auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.name == n; });
            return it == fields.end() ? nullptr : &*it;
        };
        if (a.kind == Kind::FieldsPrivate) {
            for (const std::string& n : a.args) {
                const Field* f = field(n);
                if (f == nullptr) {
                    failing("no field " + n);
                } else if (f->access != Access::Private) {
                    failing("field " + n + " is " + (f->access == Access::Public ? "public" : "protected"));
                }
            }
        } else {
            if (a.args.size() != 2) {
                fail(Errc::ParseError, a.key() + ": ComposedOf takes a field and a type");
            }
            const Field* f = field(a.args[0]);
            if (f == nullptr) {
                failing("no field " + a.args[0]);
            } else if (collapse(f->type) != collapse(a.args[1])) {
                failing("field " + a.args[0] + " has type " + f->type + ", expected " + a.args[1]);
            }
        }
        break;
    }
    case Kind::NoMutates:
    case Kind::NoCalls: {
        const auto bodies = find_function(code, a.item);
        if (bodies.empty()) {
            unknown(a, "function");
        }
        r.assertion.location = bodies.front().location;
        for (const FunctionBody& fb : bodies) {
            for (const std::string& target : a.args) {
                if (a.kind == Kind::NoMutates) {
                    if (auto line = find_mutation(fb.body, target)) {
                        failing("mutates " + target + ": " + *line);
                    }
                } else {
                    const std::regex call("(^|[^\\w])" + escape(last_component(target)) +
                                          R"(\s*(<[^;{}()]*>)?\s*\()");
                    if (std::regex_search(fb.body, call)) {
                        failing("calls " + target);
                    }
                }
            }
        }
        break;
    }
    }
    return r;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        fail(Errc::Io, "cannot read " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

const char* to_string(Kind kind) noexcept {
    switch (kind) {
    case Kind::NotDuplicable:
        return "NotDuplicable";
    case Kind::FieldsPrivate:
        return "FieldsPrivate";
    case Kind::ComposedOf:
        return "ComposedOf";
    case Kind::NoMutates:
        return "NoMutates";
    case Kind::NoCalls:
        return "NoCalls";
    }
    return "?";
}

Kind kind_from_string(const std::string& text) {
    for (const Kind k : {Kind::NotDuplicable, Kind::FieldsPrivate, Kind::ComposedOf, Kind::NoMutates, Kind::NoCalls}) {
        if (text == to_string(k)) {
            return k;
        }
    }
    fail(Errc::ParseError, "unknown assertion kind '" + text + "'");
}

std::string Assertion::key() const {
    std::string s = std::string(to_string(kind)) + " " + item;
    for (const std::string& a : args) {
        s += " " + a;
    }
    return s;
}

Codebase load_codebase(const fs::path& root) {
    Codebase code;
    for (const char* dir : {"include", "src", "tools"}) {
        const fs::path d = root / dir;
        if (!fs::is_directory(d)) {
            continue;
        }
        for (const auto& e : fs::recursive_directory_iterator(d)) {
            const std::string ext = e.path().extension().string();
            if (e.is_regular_file() && (ext == ".hpp" || ext == ".h" || ext == ".cpp")) {
                code[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
            }
        }
    }
    return code;
}

std::vector<Assertion> collect(const Codebase& code) {
    static const std::regex marker(R"(\bIRS_CONFORM_(NOT_DUPLICABLE|FIELDS_PRIVATE|COMPOSED_OF|NO_MUTATES|NO_CALLS)\s*\()");
    static const std::map<std::string, Kind> kinds = {{"NOT_DUPLICABLE", Kind::NotDuplicable},
                                                      {"FIELDS_PRIVATE", Kind::FieldsPrivate},
                                                      {"COMPOSED_OF", Kind::ComposedOf},
                                                      {"NO_MUTATES", Kind::NoMutates},
                                                      {"NO_CALLS", Kind::NoCalls}};
    std::vector<Assertion> out;
    for (const auto& [path, raw] : code) {
        const std::string text = strip(raw);
        for (auto it = std::sregex_iterator(text.begin(), text.end(), marker); it != std::sregex_iterator(); ++it) {
            const auto pos = static_cast<std::size_t>(it->position(0));
            const std::size_t ls = text.rfind('\n', pos);
            const std::string line_head = trim(text.substr(ls == std::string::npos ? 0 : ls + 1, pos));
            if (!line_head.empty() && line_head[0] == '#') {
                continue; // the macro definitions themselves
            }
            const std::size_t open = pos + static_cast<std::size_t>(it->length(0)) - 1;
            const std::size_t close = match(text, open);
            if (close == std::string::npos) {
                continue;
            }
            std::vector<std::string> args = split_args(text.substr(open + 1, close - open - 1));
            if (args.empty()) {
                continue;
            }
            Assertion a;
            a.kind = kinds.at((*it)[1]);
            a.item = args.front();
            a.args.assign(args.begin() + 1, args.end());
            a.location = {path, line_of(text, pos)};
            out.push_back(std::move(a));
        }
    }
    std::sort(out.begin(), out.end(), [](const Assertion& x, const Assertion& y) {
        const std::string kx = x.key();
        const std::string ky = y.key();
        if (kx != ky) {
            return kx < ky;
        }
        return std::tie(x.location.file, x.location.line) < std::tie(y.location.file, y.location.line);
    });
    return out;
}

std::string format_collection(const std::vector<Assertion>& assertions) {
    std::string out;
    for (const Assertion& a : assertions) {
        out += a.key() + "  " + a.location.file + ":" + std::to_string(a.location.line) + "\n";
    }
    return out;
}

std::vector<Assertion> parse_manifest(const std::string& text) {
    std::vector<Assertion> out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        std::istringstream words(line);
        std::string kind;
        if (!(words >> kind)) {
            continue;
        }
        Assertion a;
        try {
            a.kind = kind_from_string(kind);
        } catch (const Error& e) {
            fail(Errc::ParseError, "manifest line " + std::to_string(n) + ": " + e.what());
        }
        if (!(words >> a.item)) {
            fail(Errc::ParseError, "manifest line " + std::to_string(n) + ": missing item");
        }
        for (std::string w; words >> w;) {
            a.args.push_back(w);
        }
        if (a.kind != Kind::NotDuplicable && a.args.empty()) {
            fail(Errc::ParseError, "manifest line " + std::to_string(n) + ": " + kind + " needs arguments");
        }
        out.push_back(std::move(a));
    }
    return out;
}

bool Report::pass() const noexcept { return failures() == 0; }

std::size_t Report::failures() const noexcept {
    return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const Result& r) { return !r.pass; }));
}

std::string Report::format() const {
    std::string out;
    for (const Result& r : results) {
        out += std::string(r.pass ? "PASS " : "FAIL ") + r.assertion.key() + " @ " + r.assertion.location.file + ":" +
               std::to_string(r.assertion.location.line);
        if (!r.pass) {
            out += " -- " + r.diagnostic;
        }
        out += "\n";
    }
    return out;
}

Report check(const std::vector<Assertion>& manifest, const Codebase& code) {
    const Stripped stripped = strip_all(code);
    const std::vector<Assertion> collected = collect(code);
    Report report;
    for (const Assertion& a : manifest) {
        report.results.push_back(check_one(a, stripped, collected));
    }
    return report;
}

Mutation parse_mutation(const std::string& text) {
    Mutation m;
    std::istringstream in(text);
    std::string line;
    enum { Header, Find, Replace } section = Header;
    std::vector<std::string> find;
    std::vector<std::string> replace;
    while (std::getline(in, line)) {
        if (line == "--- find") {
            section = Find;
        } else if (line == "--- replace") {
            section = Replace;
        } else if (section == Find) {
            find.push_back(line);
        } else if (section == Replace) {
            replace.push_back(line);
        } else if (!trim(line).empty() && trim(line)[0] != '#') {
            const auto sp = line.find(' ');
            const std::string key = line.substr(0, sp);
            const std::string value = sp == std::string::npos ? "" : trim(line.substr(sp + 1));
            if (key == "name") {
                m.name = value;
            } else if (key == "file") {
                m.file = value;
            } else if (key == "expect") {
                m.expect = value;
            } else {
                fail(Errc::ParseError, "unknown mutation header '" + key + "'");
            }
        }
    }
    auto join = [](const std::vector<std::string>& lines) {
        std::string s;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            s += (i ? "\n" : "") + lines[i];
        }
        return s;
    };
    m.find = join(find);
    m.replace = join(replace);
    if (m.file.empty() || m.expect.empty() || m.find.empty()) {
        fail(Errc::ParseError, "mutation needs file, expect and a find block");
    }
    return m;
}

Codebase apply(const Codebase& code, const Mutation& mutation) {
    Codebase out = code;
    const auto it = out.find(mutation.file);
    if (it == out.end()) {
        fail(Errc::NotFound, "mutation target " + mutation.file + " not in codebase");
    }
    const std::size_t at = it->second.find(mutation.find);
    if (at == std::string::npos || it->second.find(mutation.find, at + 1) != std::string::npos) {
        fail(Errc::NotFound, "mutation '" + mutation.name + "' find block must occur exactly once");
    }
    it->second.replace(at, mutation.find.size(), mutation.replace);
    return out;
}

MutationOutcome run_mutation(const std::vector<Assertion>& manifest, const Codebase& code, const Mutation& mutation) {
    MutationOutcome out{mutation.name, false, {}};
    const Report report = check(manifest, apply(code, mutation));
    for (const Result& r : report.results) {
        if (r.assertion.key() == mutation.expect) {
            out.killed = !r.pass;
            out.detail = r.pass ? "expected assertion still passes" : r.diagnostic;
            return out;
        }
    }
    out.detail = "expected assertion not in manifest";
    return out;
}

} // namespace irs::conformance
