#include <doctest.h>

#include <random>

#include "nnbom/clonecore.hpp"
#include "nnbom/util.hpp"
#include "support/type2.hpp"

using namespace nnbom;
using clonecore::normalize;

TEST_CASE("sha256 known vectors") {
    CHECK(util::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(util::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("normalization of the reference module") {
    std::string src =
        "class Net(nn.Module):\n"
        "  # c\n"
        "  def __init__(self):\n"
        "    self.fc = nn.Linear(10, 20)";
    auto form = normalize(src);
    REQUIRE(form.has_value());
    CHECK(form->canonical ==
          "class CLASS ( nn . Module ) : def __init__ ( self ) : "
          "self . A1 = nn . Linear ( NUM , NUM )");
}

TEST_CASE("comments and indentation do not affect the form") {
    std::string a =
        "class Block(nn.Module):\n"
        "    def forward(self, x):\n"
        "        return x + 1\n";
    std::string b =
        "class Block(nn.Module):\n"
        "        # a comment\n"
        "        def forward(self, x):   # inline\n"
        "\n"
        "                return x + 1\n";
    auto fa = normalize(a), fb = normalize(b);
    REQUIRE(fa);
    REQUIRE(fb);
    CHECK(fa->canonical == fb->canonical);
}

TEST_CASE("consistent variable renaming does not affect the form") {
    std::string a =
        "class M(nn.Module):\n"
        "    def __init__(self, w):\n"
        "        self.scale = w\n"
        "        out = w * 2\n"
        "        self.out = out\n";
    std::string b =
        "class M(nn.Module):\n"
        "    def __init__(self, weight):\n"
        "        self.scale = weight\n"
        "        result = weight * 2\n"
        "        self.out = result\n";
    auto fa = normalize(a), fb = normalize(b);
    REQUIRE(fa);
    REQUIRE(fb);
    CHECK(fa->canonical == fb->canonical);
}

TEST_CASE("literal substitution does not affect the form") {
    auto fa = normalize("class M:\n    def f(self):\n        return \"a\", 10\n");
    auto fb = normalize("class M:\n    def f(self):\n        return 'bb', 3.5\n");
    REQUIRE(fa);
    REQUIRE(fb);
    CHECK(fa->canonical == fb->canonical);
}

TEST_CASE("class rename maps to the same form") {
    auto fa = normalize("class Alpha(nn.Module):\n    def f(self):\n        return Alpha\n");
    auto fb = normalize("class Beta(nn.Module):\n    def f(self):\n        return Beta\n");
    REQUIRE(fa);
    REQUIRE(fb);
    CHECK(fa->canonical == fb->canonical);
}

TEST_CASE("method names, dotted names, self and kwarg names are preserved") {
    std::string src =
        "class M(nn.Module):\n"
        "    def forward(self, x):\n"
        "        y = torch.cat([x], dim=0)\n"
        "        self.lin = nn.Linear(4, 4, bias=False)\n"
        "        return self.lin(y)\n";
    auto form = normalize(src);
    REQUIRE(form);
    auto has = [&](const std::string& tok) {
        return std::find(form->tokens.begin(), form->tokens.end(), tok) != form->tokens.end();
    };
    CHECK(has("forward"));
    CHECK(has("torch"));
    CHECK(has("cat"));
    CHECK(has("self"));
    CHECK(has("dim"));
    CHECK(has("bias"));
    CHECK(has("Linear"));
    CHECK_FALSE(has("x"));
    CHECK_FALSE(has("y"));
    CHECK(has("V1"));
    CHECK(has("V2"));
    CHECK(has("A1"));
}

TEST_CASE("for and comprehension variables rename; lambda parameters rename") {
    std::string a =
        "class M:\n"
        "    def f(self, items):\n"
        "        total = [i * 2 for i in items]\n"
        "        for j in total:\n"
        "            self.push(j)\n"
        "        g = lambda k: k + 1\n"
        "        return g\n";
    std::string b = a;
    for (const auto& [from, to] : std::vector<std::pair<std::string, std::string>>{
             {"[i ", "[idx "}, {" i ", " idx "}, {"(j)", "(val)"}, {" j ", " val "},
             {" k:", " kk:"}, {" k ", " kk "}}) {
        size_t pos = 0;
        while ((pos = b.find(from, pos)) != std::string::npos) {
            b.replace(pos, from.size(), to);
            pos += to.size();
        }
    }
    auto fa = normalize(a), fb = normalize(b);
    REQUIRE(fa);
    REQUIRE(fb);
    CHECK(fa->canonical == fb->canonical);
}

TEST_CASE("structurally different modules map to different hashes") {
    auto fa = normalize("class M(nn.Module):\n    def f(self):\n        return 1\n");
    auto fb = normalize("class M(nn.Module):\n    def f(self):\n        return 1 + 2\n");
    auto fc = normalize("class M(nn.Module):\n    def g(self):\n        return 1\n");
    REQUIRE(fa);
    REQUIRE(fb);
    REQUIRE(fc);
    CHECK(clonecore::module_hash(*fa) != clonecore::module_hash(*fb));
    CHECK(clonecore::module_hash(*fa) != clonecore::module_hash(*fc));
}

TEST_CASE("hashing is deterministic") {
    auto form = normalize("class M:\n    pass\n");
    REQUIRE(form);
    CHECK(clonecore::module_hash(*form) == clonecore::module_hash(*form));
    CHECK(clonecore::module_hash(*form).size() == 64);
}

TEST_CASE("randomized type-2 transformations keep the hash") {
    struct Fixture {
        std::string source;
        std::vector<std::string> renameable;
    };
    std::vector<Fixture> fixtures = {
        {"class ConvBlock(nn.Module):\n"
         "    def __init__(self, channels):\n"
         "        super().__init__()\n"
         "        self.conv = nn.Conv2d(channels, channels, 3)\n"
         "        self.act = nn.ReLU()\n"
         "    def forward(self, x):\n"
         "        out = self.conv(x)\n"
         "        return self.act(out)\n",
         {"channels", "x", "out"}},
        {"class Head(nn.Module):\n"
         "    def __init__(self, size):\n"
         "        super().__init__()\n"
         "        self.proj = nn.Linear(size, 2)\n"
         "    def forward(self, h):\n"
         "        logits = self.proj(h)\n"
         "        return logits\n",
         {"size", "h", "logits"}},
        {"class Loop(nn.Module):\n"
         "    def forward(self, xs):\n"
         "        acc = 0\n"
         "        for item in xs:\n"
         "            acc = acc + item * 2\n"
         "        return acc\n",
         {"xs", "acc", "item"}},
    };

    std::mt19937 rng(2024);
    for (const auto& fixture : fixtures) {
        auto base = normalize(fixture.source);
        REQUIRE(base);
        std::string expected = clonecore::module_hash(*base);
        for (int trial = 0; trial < 40; ++trial) {
            testsupport::Type2Options options;
            options.renameable = fixture.renameable;
            std::string mutated =
                testsupport::apply_type2_transform(fixture.source, options, rng);
            auto form = normalize(mutated);
            REQUIRE(form);
            CHECK(clonecore::module_hash(*form) == expected);
        }
    }
}

TEST_CASE("family grouping") {
    using clonecore::FamilyMemberInput;
    std::vector<FamilyMemberInput> records = {
        {0, "h1", "repoA", 2017, {"CV"}, "Net", 100},
        {1, "h1", "repoB", 2024, {"NLP", "CV"}, "NetCopy", 300},
        {2, "h2", "repoA", 2020, {}, "Other", 200},
    };
    auto families = clonecore::group_families(records);
    REQUIRE(families.size() == 2);
    const auto& f1 = families[0].hash == "h1" ? families[0] : families[1];
    const auto& f2 = families[0].hash == "h2" ? families[0] : families[1];
    CHECK(f1.frequency == 2);
    CHECK(f1.first_year == 2017);
    CHECK(f1.last_year == 2024);
    CHECK(f1.lifespan() == 8);
    CHECK(f1.repositories.size() == 2);
    CHECK(f1.domains.at("CV") == 2);
    CHECK(f1.domains.at("NLP") == 1);
    CHECK(f1.representative == "Net");
    CHECK(f2.frequency == 1);
    CHECK(f2.lifespan() == 1);

    CHECK(clonecore::group_families({}).empty());

    // partition: member counts sum to the record count
    int total = 0;
    for (const auto& f : families) total += f.frequency;
    CHECK(total == static_cast<int>(records.size()));
}

TEST_CASE("unparseable module source is rejected") {
    CHECK_FALSE(normalize("").has_value());
    CHECK_FALSE(normalize("not a class at all").has_value());
}
