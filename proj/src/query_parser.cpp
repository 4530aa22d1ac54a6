#include <algorithm>
#include <cctype>
#include <charconv>

#include "scalestore/errors.hpp"
#include "scalestore/query.hpp"

namespace scalestore {

namespace {

struct Token {
    enum class Kind { ident, number, symbol, param, end };
    Kind kind = Kind::end;
    std::string text;
    std::size_t pos = 0;
};

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto is_ident_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') {
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = i;
            while (i < text.size() && is_ident_char(text[i])) ++i;
            out.push_back({Token::Kind::ident, std::string(text.substr(start, i - start)), start});
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            out.push_back({Token::Kind::number, std::string(text.substr(start, i - start)), start});
        } else if (c == '<') {
            std::size_t start = i++;
            std::size_t name_start = i;
            while (i < text.size() && is_ident_char(text[i])) ++i;
            if (i == name_start || i >= text.size() || text[i] != '>') {
                throw SyntaxError(start, "malformed parameter placeholder");
            }
            out.push_back({Token::Kind::param, std::string(text.substr(name_start, i - name_start)), start});
            ++i;
        } else if (std::string_view("*.,=;()").find(c) != std::string_view::npos) {
            out.push_back({Token::Kind::symbol, std::string(1, c), i});
            ++i;
        } else if (c == '\'' || c == '"') {
            throw SyntaxError(i, "literal values are not supported; use a <parameter>");
        } else {
            throw SyntaxError(i, std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back({Token::Kind::end, "", text.size()});
    return out;
}

struct ColumnName {
    std::string qualifier;  // empty if unqualified
    std::string field;
    std::size_t pos = 0;
};

class Parser {
public:
    Parser(std::string_view text, const Schema& schema)
        : text_(text), schema_(schema), tokens_(tokenize(text)) {}

    QueryTemplate parse() {
        QueryTemplate t;
        t.text = std::string(text_);
        if (keyword("INDEX")) {
            t.name = expect_ident("index name");
            expect_keyword("AS");
        }
        expect_keyword("SELECT");
        parse_select_list();
        expect_keyword("FROM");
        add_alias(t, parse_table_ref());
        while (keyword("JOIN")) {
            auto ref = parse_table_ref();
            expect_keyword("ON");
            auto lhs = parse_column_or_param("join condition");
            expect_symbol("=");
            auto rhs = parse_column_or_param("join condition");
            add_alias(t, ref);
            add_join(t, lhs, rhs);
        }
        if (keyword("WHERE")) {
            do {
                parse_predicate(t);
                if (peek_keyword("OR")) throw SyntaxError(peek().pos, "disjunction is not supported");
            } while (keyword("AND"));
        }
        if (keyword("ORDER")) {
            expect_keyword("BY");
            if (peek().kind == Token::Kind::param) {
                throw UnboundParameter("parameter <" + peek().text +
                                       "> may only appear in an equality predicate");
            }
            t.order_by = resolve(t, parse_column());
            if (keyword("DESC")) throw SyntaxError(previous().pos, "descending order is not supported");
            keyword("ASC");
        }
        if (keyword("LIMIT")) {
            const auto& tok = advance();
            if (tok.kind == Token::Kind::param) {
                throw UnboundParameter("parameter <" + tok.text + "> may only appear in an equality predicate");
            }
            if (tok.kind != Token::Kind::number) throw SyntaxError(tok.pos, "expected LIMIT count");
            std::int64_t n = 0;
            std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), n);
            if (n <= 0) throw SyntaxError(tok.pos, "LIMIT must be positive");
            t.limit = n;
        }
        if (peek().kind == Token::Kind::symbol && peek().text == ";") advance();
        if (peek().kind != Token::Kind::end) {
            if (peek_keyword("GROUP") || peek_keyword("HAVING") || peek_keyword("UNION")) {
                throw SyntaxError(peek().pos, "aggregation and set operations are not supported");
            }
            throw SyntaxError(peek().pos, "unexpected '" + peek().text + "'");
        }
        resolve_select(t);
        if (t.name.empty()) t.name = default_name(t);
        return t;
    }

private:
    struct TableRefText {
        std::string table;
        std::string alias;
        std::size_t pos;
    };

    const Token& peek() const { return tokens_[i_]; }
    const Token& previous() const { return tokens_[i_ ? i_ - 1 : 0]; }
    const Token& advance() {
        const Token& t = tokens_[i_];
        if (t.kind != Token::Kind::end) ++i_;
        return t;
    }

    bool peek_keyword(std::string_view kw) const {
        return peek().kind == Token::Kind::ident && upper(peek().text) == kw;
    }
    bool keyword(std::string_view kw) {
        if (!peek_keyword(kw)) return false;
        advance();
        return true;
    }
    void expect_keyword(std::string_view kw) {
        if (!keyword(kw)) throw SyntaxError(peek().pos, "expected " + std::string(kw));
    }
    void expect_symbol(std::string_view s) {
        if (peek().kind != Token::Kind::symbol || peek().text != s) {
            throw SyntaxError(peek().pos, "expected '" + std::string(s) + "'");
        }
        advance();
    }
    bool symbol(std::string_view s) {
        if (peek().kind != Token::Kind::symbol || peek().text != s) return false;
        advance();
        return true;
    }
    std::string expect_ident(const char* what) {
        if (peek().kind != Token::Kind::ident) throw SyntaxError(peek().pos, std::string("expected ") + what);
        return advance().text;
    }

    static bool reserved(const std::string& word) {
        static const char* words[] = {"SELECT", "FROM", "JOIN", "ON", "WHERE", "AND", "OR",
                                      "ORDER",  "BY",   "LIMIT", "AS", "INDEX", "ASC", "DESC"};
        auto u = upper(word);
        return std::any_of(std::begin(words), std::end(words), [&](const char* w) { return u == w; });
    }

    void parse_select_list() {
        select_pos_ = peek().pos;
        if (symbol("*")) {
            select_star_ = true;
            return;
        }
        do {
            ColumnName c;
            c.pos = peek().pos;
            std::string first = expect_ident("select item");
            if (symbol(".")) {
                if (symbol("*")) {
                    select_alias_star_ = first;
                    if (peek().kind == Token::Kind::symbol && peek().text == ",") {
                        throw SyntaxError(peek().pos, "select list must reference a single record");
                    }
                    return;
                }
                c.qualifier = first;
                c.field = expect_ident("field name");
            } else {
                c.field = first;
            }
            select_columns_.push_back(c);
        } while (symbol(","));
    }

    TableRefText parse_table_ref() {
        TableRefText ref;
        ref.pos = peek().pos;
        ref.table = expect_ident("table name");
        if (keyword("AS")) {
            ref.alias = expect_ident("alias");
        } else if (peek().kind == Token::Kind::ident && !reserved(peek().text)) {
            ref.alias = advance().text;
        } else {
            ref.alias = ref.table;
        }
        return ref;
    }

    ColumnName parse_column() {
        ColumnName c;
        c.pos = peek().pos;
        std::string first = expect_ident("column");
        if (symbol(".")) {
            c.qualifier = first;
            c.field = expect_ident("field name");
        } else {
            c.field = first;
        }
        return c;
    }

    ColumnName parse_column_or_param(const char* where) {
        if (peek().kind == Token::Kind::param) {
            throw UnboundParameter("parameter <" + peek().text + "> used in " + where +
                                   "; parameters may only appear in WHERE equality predicates");
        }
        return parse_column();
    }

    void add_alias(QueryTemplate& t, const TableRefText& ref) {
        const auto& table = schema_.require_table(ref.table);
        if (std::find(t.aliases.begin(), t.aliases.end(), ref.alias) != t.aliases.end()) {
            throw ValidationError("duplicate alias '" + ref.alias + "'");
        }
        t.aliases.push_back(ref.alias);
        t.tables.push_back(table);
    }

    std::size_t resolve_alias(const QueryTemplate& t, const std::string& name, std::size_t pos) const {
        for (std::size_t i = 0; i < t.aliases.size(); ++i) {
            if (t.aliases[i] == name) return i;
        }
        // A table name may stand for its alias when it appears once.
        std::optional<std::size_t> hit;
        for (std::size_t i = 0; i < t.tables.size(); ++i) {
            if (t.tables[i].name == name) {
                if (hit) throw ValidationError("ambiguous reference '" + name + "'");
                hit = i;
            }
        }
        if (hit) return *hit;
        if (!schema_.find_table(name)) throw UnknownTable(name);
        throw SyntaxError(pos, "table '" + name + "' is not part of the query");
    }

    FieldRef resolve(const QueryTemplate& t, const ColumnName& c) const {
        if (!c.qualifier.empty()) {
            auto a = resolve_alias(t, c.qualifier, c.pos);
            return {a, t.tables[a].require_field(c.field)};
        }
        std::optional<FieldRef> hit;
        for (std::size_t a = 0; a < t.tables.size(); ++a) {
            if (auto f = t.tables[a].field_index(c.field)) {
                if (hit) throw ValidationError("ambiguous column '" + c.field + "'");
                hit = FieldRef{a, *f};
            }
        }
        if (!hit) throw UnknownField(c.field);
        return *hit;
    }

    void add_join(QueryTemplate& t, const ColumnName& lhs, const ColumnName& rhs) {
        std::size_t added = t.aliases.size() - 1;
        FieldRef a = resolve(t, lhs);
        FieldRef b = resolve(t, rhs);
        if (a.alias != added) std::swap(a, b);
        if (a.alias != added || b.alias == added) {
            throw ValidationError("JOIN ... ON must relate the joined table to an earlier one");
        }
        const auto& ta = t.tables[a.alias];
        const auto& tb = t.tables[b.alias];
        const std::string& fa = ta.fields[a.field].name;
        const std::string& fb = tb.fields[b.field].name;
        for (const auto& r : schema_.relationships) {
            bool forward = r.from_table == tb.name && r.from_field == fb && r.to_table == ta.name &&
                           r.to_field == fa;
            bool backward = r.from_table == ta.name && r.from_field == fa && r.to_table == tb.name &&
                            r.to_field == fb;
            if (forward || backward) {
                t.joins.push_back(JoinStep{a, b, r.name, r.bound});
                return;
            }
        }
        throw ValidationError("no declared relationship joins " + ta.name + "." + fa + " and " +
                              tb.name + "." + fb);
    }

    void parse_predicate(QueryTemplate& t) {
        std::size_t pos = peek().pos;
        if (peek().kind == Token::Kind::param) {
            std::string param = advance().text;
            expect_symbol("=");
            auto col = parse_column();
            add_predicate(t, resolve(t, col), param);
            return;
        }
        auto col = parse_column();
        expect_symbol("=");
        if (peek().kind == Token::Kind::param) {
            add_predicate(t, resolve(t, col), advance().text);
            return;
        }
        if (peek().kind == Token::Kind::ident) {
            throw SyntaxError(pos, "column comparisons belong in JOIN ... ON");
        }
        throw SyntaxError(peek().pos, "expected <parameter>");
    }

    static void add_predicate(QueryTemplate& t, FieldRef f, const std::string& param) {
        for (const auto& p : t.predicates) {
            if (p.param == param && t.tables[p.field.alias].fields[p.field.field].kind !=
                                        t.tables[f.alias].fields[f.field].kind) {
                throw TypeMismatch("parameter <" + param + "> compared with fields of different kinds");
            }
        }
        t.predicates.push_back({f, param});
        if (std::find(t.params.begin(), t.params.end(), param) == t.params.end()) {
            t.params.push_back(param);
        }
    }

    void resolve_select(QueryTemplate& t) {
        if (select_star_) {
            t.target = 0;
            return;
        }
        if (!select_alias_star_.empty()) {
            t.target = resolve_alias(t, select_alias_star_, select_pos_);
            return;
        }
        std::optional<std::size_t> target;
        for (const auto& c : select_columns_) {
            auto f = resolve(t, c);
            if (target && *target != f.alias) {
                throw ValidationError("select list must reference a single record");
            }
            target = f.alias;
            t.select_fields.push_back(f.field);
        }
        t.target = target.value_or(0);
    }

    static std::string default_name(const QueryTemplate& t) {
        std::string name = t.base().name;
        for (const auto& p : t.params) name += "_" + p;
        if (t.order_by) name += "_by_" + t.field_name(*t.order_by);
        return name + "_index";
    }

    std::string_view text_;
    const Schema& schema_;
    std::vector<Token> tokens_;
    std::size_t i_ = 0;
    bool select_star_ = false;
    std::string select_alias_star_;
    std::vector<ColumnName> select_columns_;
    std::size_t select_pos_ = 0;
};

}  // namespace

std::string QueryTemplate::field_name(const FieldRef& f) const {
    return tables[f.alias].fields[f.field].name;
}

std::size_t QueryTemplate::occurrences(std::string_view relation) const {
    return static_cast<std::size_t>(std::count_if(
        tables.begin(), tables.end(), [&](const TableDef& t) { return t.name == relation; }));
}

bool QueryTemplate::is_primary_key_lookup() const {
    if (!joins.empty()) return false;
    const auto& t = base();
    std::vector<std::size_t> fields;
    for (const auto& p : predicates) fields.push_back(p.field.field);
    std::sort(fields.begin(), fields.end());
    fields.erase(std::unique(fields.begin(), fields.end()), fields.end());
    auto pk = t.primary_key;
    std::sort(pk.begin(), pk.end());
    if (fields != pk) return false;
    // One param per key field, so the prefix is fully determined.
    if (params.size() != pk.size()) return false;
    return !order_by || t.is_primary_key(order_by->field);
}

QueryTemplate parse_template(std::string_view text, const Schema& schema) {
    return Parser(text, schema).parse();
}

std::vector<QueryTemplate> parse_templates(std::string_view text, const Schema& schema) {
    std::vector<QueryTemplate> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find(';', start);
        auto piece = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        bool blank = true;
        bool in_comment = false;
        for (std::size_t i = 0; i < piece.size(); ++i) {
            char c = piece[i];
            if (in_comment) {
                if (c == '\n') in_comment = false;
                continue;
            }
            if (c == '-' && i + 1 < piece.size() && piece[i + 1] == '-') {
                in_comment = true;
                continue;
            }
            if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
        }
        if (!blank) {
            try {
                out.push_back(parse_template(piece, schema));
            } catch (const SyntaxError& e) {
                throw SyntaxError(start + e.position(), e.what());
            }
        }
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

}  // namespace scalestore
