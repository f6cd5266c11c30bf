#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "repogen/analysis.hpp"
#include "support.hpp"

using namespace repogen;
using namespace repogen::analysis;
using fixtures::make_repo;

namespace {

using Strings = std::vector<std::string>;

// Class with 64 attributes (one of them _registered_updates) and four
// methods besides __init__, which is a builtin name: 68 members.
std::string big_class_source(std::string_view probe_body) {
    std::string src = "class Scheduler:\n    def __init__(self):\n";
    src += "        self._registered_updates = []\n";
    for (int i = 0; i < 63; ++i) src += "        self.slot_" + std::to_string(i) + " = 0\n";
    src += "    def add(self, update):\n        return update\n";
    src += "    def update(self):\n        return 1\n";
    src += "    def flush(self):\n        return 2\n";
    src += "    def probe(self):\n        " + std::string(probe_body) + "\n";
    return src;
}

int line_count(std::string_view text) { return static_cast<int>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST(ScopeIndex, ModuleTableHasFunction) {
    ScopeIndex index = ScopeIndex::build(make_repo({{"a.mp", "def f():\n    return 1\n"}}));
    auto sym = index.resolve("a.mp", "f");
    ASSERT_TRUE(sym);
    EXPECT_EQ(sym->kind, Symbol::Kind::Function);
}

TEST(ScopeIndex, CounterValueAttribute) {
    ScopeIndex index = ScopeIndex::build(make_repo({{"counter.mp",
                                                     "class Counter:\n"
                                                     "    def increment(self):\n"
                                                     "        self._value = 1\n"}}));
    const ClassInfo* info = index.find_class("counter.mp", "Counter");
    ASSERT_NE(info, nullptr);
    EXPECT_EQ(info->attributes, Strings{"_value"});
}

TEST(ScopeIndex, ImportCrossesFiles) {
    Repository repo = make_repo({{"util.mp", "def g():\n    return 1\n"},
                                 {"main.mp", "from util import g\n\ndef h():\n    return g()\n"}});
    ScopeIndex index = ScopeIndex::build(repo);
    auto sym = index.resolve("main.mp", "g");
    ASSERT_TRUE(sym);
    EXPECT_EQ(sym->kind, Symbol::Kind::Function);
    EXPECT_EQ(sym->file, "util.mp");
    EXPECT_EQ(index.import_edges().size(), 1u);
    EXPECT_TRUE(lint_check(repo, "main.mp").empty());
}

TEST(ScopeIndex, ImportCycleIsADiagnostic) {
    Repository repo = make_repo({{"a.mp", "from b import y\nx = 1\n"}, {"b.mp", "from a import x\ny = 2\n"}});
    ScopeIndex index = ScopeIndex::build(repo);
    ASSERT_EQ(index.diagnostics().size(), 1u);
    EXPECT_NE(index.diagnostics()[0].message.find("cycle"), std::string::npos);
    EXPECT_TRUE(index.resolve("a.mp", "y"));
}

TEST(ScopeIndex, RebuildIsEqual) {
    for (const Repository& repo : fixtures::demo_repos()) {
        EXPECT_TRUE(ScopeIndex::build(repo) == ScopeIndex::build(repo)) << repo.name();
    }
}

TEST(Complete, SelfMembersAlphabetical) {
    Repository repo = make_repo({{"c.mp",
                                  "class C:\n"
                                  "    def m(self):\n"
                                  "        self.y = 1\n"
                                  "        self.x = 2\n"
                                  "        self.\n"}});
    EXPECT_EQ(tool_complete(repo, {"c.mp", 5, 13}), (Strings{"m", "x", "y"}));
}

TEST(Complete, SixtyEightMembersAfterSelf) {
    std::string src = big_class_source("self.");
    Repository repo = make_repo({{"sched.mp", src}});
    CompletionList list = tool_complete(repo, {"sched.mp", line_count(src), 13});
    EXPECT_EQ(list.size(), 68u);
    EXPECT_TRUE(std::binary_search(list.begin(), list.end(), "_registered_updates"));
    EXPECT_FALSE(std::binary_search(list.begin(), list.end(), "__init__"));
}

TEST(Complete, ScopeAtStatementStart) {
    Repository repo = make_repo({{"s.mp", "def f(a):\n    b = 1\n    \n"}});
    EXPECT_EQ(tool_complete(repo, {"s.mp", 3, 4}), (Strings{"a", "b", "f"}));
}

TEST(Complete, LocalNotVisibleBeforeItsAssignment) {
    Repository repo = make_repo({{"s.mp", "def f(a):\n    \n    b = 1\n"}});
    EXPECT_EQ(tool_complete(repo, {"s.mp", 2, 4}), (Strings{"a", "f"}));
}

TEST(Complete, LocalBindingAndModuleAlias) {
    Repository repo = make_repo({{"lib.mp", "class Box:\n    def open(self):\n        self.lid = 1\n\ndef helper():\n    return 1\n"},
                                 {"main.mp",
                                  "import lib\nfrom lib import Box\n\ndef f():\n    b = Box()\n    b.\n    lib.\n    q.\n"}});
    EXPECT_EQ(tool_complete(repo, {"main.mp", 6, 6}), (Strings{"lid", "open"}));
    EXPECT_EQ(tool_complete(repo, {"main.mp", 7, 8}), (Strings{"Box", "helper"}));
    EXPECT_TRUE(tool_complete(repo, {"main.mp", 8, 6}).empty());
}

TEST(Complete, OutOfRangeCaretThrows) {
    Repository repo = make_repo({{"s.mp", "x = 1\n"}});
    EXPECT_THROW(tool_complete(repo, {"s.mp", 9, 0}), PositionError);
    EXPECT_THROW(tool_complete(repo, {"s.mp", 1, 40}), PositionError);
}

TEST(Complete, SortedUniqueWithoutBuiltinsEverywhere) {
    std::mt19937 rng(5);
    int checked = 0;
    for (const Repository& repo : fixtures::demo_repos()) {
        ScopeIndex index = ScopeIndex::build(repo);
        for (const std::string& path : repo.paths()) {
            for (const minilang::LexToken& tok : minilang::lex(repo.text(path)).tokens) {
                if (tok.kind == minilang::TokenKind::Dedent || rng() % 4 != 0) continue;
                CompletionList list = tool_complete(index, {path, tok.line, tok.column});
                EXPECT_TRUE(std::is_sorted(list.begin(), list.end()));
                EXPECT_EQ(std::adjacent_find(list.begin(), list.end()), list.end());
                for (const std::string& name : list) EXPECT_FALSE(is_builtin(name)) << name;
                ++checked;
            }
        }
    }
    EXPECT_GT(checked, 500);
}

TEST(Builtins, Table) {
    EXPECT_TRUE(is_builtin("__dict__"));
    EXPECT_TRUE(is_builtin("print"));
    EXPECT_FALSE(is_builtin("_registered_updates"));
    const Strings& names = builtin_names();
    EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
    EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
}

TEST(IsIdentifier, Kinds) {
    auto tokens = minilang::lex("return add.x").tokens;
    EXPECT_FALSE(is_identifier(tokens[0]));
    EXPECT_TRUE(is_identifier(tokens[1]));
    EXPECT_FALSE(is_identifier(tokens[2]));
}

TEST(Lint, UndefinedVariable) {
    auto errors = lint_check(make_repo({{"a.mp", "def f():\n    return z\n"}}), "a.mp");
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_EQ(errors[0].kind, LintKind::UndefinedVariable);
    EXPECT_EQ(errors[0].pos, (SourcePos{2, 11}));
}

TEST(Lint, NoMemberOnSelf) {
    auto errors = lint_check(make_repo({{"a.mp",
                                         "class S:\n"
                                         "    def __init__(self):\n"
                                         "        self._registered_updates = []\n"
                                         "    def run(self):\n"
                                         "        return self.updates\n"}}),
                             "a.mp");
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_EQ(errors[0].kind, LintKind::NoMember);
    EXPECT_EQ(errors[0].pos, (SourcePos{5, 20}));
}

TEST(Lint, CleanFile) {
    EXPECT_TRUE(lint_check(make_repo({{"a.mp", "def f(a):\n    b = a\n    return b\n"}}), "a.mp").empty());
}

TEST(Lint, HandLabeledFixture) {
    Repository repo = make_repo({{"lib.mp", "class Box:\n    def open(self):\n        self.lid = 1\n"},
                                 {"main.mp",
                                  "from lib import Box\n"
                                  "import lib\n"
                                  "\n"
                                  "def f(p):\n"
                                  "    b = Box()\n"
                                  "    b.lid = b.lidd\n"          // no-member at 6:14
                                  "    q = lib.Bx\n"              // no-member at 7:12
                                  "    return p.anything + w\n"   // undefined w at 8:24
                                  "\n"
                                  "def g(:\n"                     // syntax error on line 10
                                  "    return 1\n"
                                  "\n"
                                  "def h():\n"
                                  "    return missing(b)\n"}});   // two undefined at 14
    std::multiset<std::tuple<LintKind, int, int>> got;
    for (const LintError& e : lint_check(repo, "main.mp")) got.insert({e.kind, e.pos.line, e.pos.column});
    std::multiset<std::tuple<LintKind, int, int>> want = {
        {LintKind::NoMember, 6, 14},          {LintKind::NoMember, 7, 12},
        {LintKind::UndefinedVariable, 8, 24}, {LintKind::SyntaxError, 10, 6},
        {LintKind::UndefinedVariable, 14, 11}, {LintKind::UndefinedVariable, 14, 19},
    };
    EXPECT_EQ(got, want);
}

TEST(Lint, JsonlRecord) {
    auto errors = lint_check(make_repo({{"a.mp", "def f():\n    return z\n"}}), "a.mp");
    EXPECT_EQ(lint_report_jsonl(errors),
              "{\"file\":\"a.mp\",\"line\":2,\"column\":11,\"kind\":\"undefined-variable\","
              "\"message\":\"undefined variable 'z'\"}\n");
}

// Whenever the completion oracle lists an identifier at its own start, the
// checker must accept that identifier.
TEST(Lint, OracleSelfConsistencyOnCorpus) {
    int checked = 0;
    for (const Repository& repo : fixtures::demo_repos()) {
        ScopeIndex index = ScopeIndex::build(repo);
        for (const std::string& path : repo.paths()) {
            std::set<std::pair<int, int>> flagged;
            for (const LintError& e : lint_check(index, path)) flagged.insert({e.pos.line, e.pos.column});
            for (const minilang::FunctionDef* func : minilang::extract_functions(repo.module(path))) {
                for (const minilang::LexToken& tok : func->body_tokens) {
                    if (!is_identifier(tok)) continue;
                    CompletionList list = tool_complete(index, {path, tok.line, tok.column});
                    if (!std::binary_search(list.begin(), list.end(), tok.text)) continue;
                    EXPECT_FALSE(flagged.count({tok.line, tok.column})) << path << ":" << tok.line;
                    ++checked;
                }
            }
        }
    }
    EXPECT_GT(checked, 1000);
}

TEST(Insert, EmptyPartialLeavesTextAlone) {
    Repository repo = make_repo({{"a.mp", "def f():\n    \n"}});
    InsertResult r = insert(repo, {"a.mp", 2, 4}, "");
    EXPECT_EQ(r.snapshot.text("a.mp"), repo.text("a.mp"));
    EXPECT_EQ(r.caret, (CaretPosition{"a.mp", 2, 4}));
}

TEST(Insert, MarkersAreRemoved) {
    Repository repo = make_repo({{"a.mp", "def f(self):\n    \n"}});
    InsertResult r = insert(repo, {"a.mp", 2, 4}, "return <COMP>self");
    EXPECT_EQ(r.snapshot.text("a.mp"), "def f(self):\n    return self\n");
    EXPECT_EQ(r.caret, (CaretPosition{"a.mp", 2, 15}));
}

TEST(Insert, CaretAfterDotSeesMemberContext) {
    Repository repo = make_repo({{"a.mp", "class C:\n    def f(self):\n        \n    def g(self):\n        return 1\n"}});
    InsertResult r = insert(repo, {"a.mp", 3, 8}, "x = 1\nself.");
    EXPECT_EQ(r.caret, (CaretPosition{"a.mp", 4, 13}));
    EXPECT_EQ(r.snapshot.text("a.mp"),
              "class C:\n    def f(self):\n        x = 1\n        self.\n    def g(self):\n        return 1\n");
    EXPECT_EQ(tool_complete(r.snapshot, r.caret), (Strings{"f", "g"}));
}

TEST(Insert, InputRepositoryUnchanged) {
    Repository repo = make_repo({{"a.mp", "def f():\n    \n"}});
    Repository copy = repo;
    for (int i = 0; i < 5; ++i) insert(repo, {"a.mp", 2, 4}, "x = " + std::to_string(i));
    EXPECT_TRUE(repo == copy);
    EXPECT_THROW(insert(repo, {"a.mp", 7, 0}, "x"), PositionError);
}

TEST(CompletionContext, MemberAndScope) {
    EXPECT_EQ(completion_context("x = self."), (CompletionContext{true, {"self"}}));
    EXPECT_EQ(completion_context("y = a.b."), (CompletionContext{true, {"a", "b"}}));
    EXPECT_EQ(completion_context("f(x)."), (CompletionContext{true, {}}));
    EXPECT_EQ(completion_context("return "), (CompletionContext{false, {}}));
}
