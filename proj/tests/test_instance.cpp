#include <random>
#include <set>

#include <gtest/gtest.h>

#include "envdt/instance.hpp"
#include "support.hpp"

using namespace envdt;
using envdt::testing::fixture;

namespace {

std::vector<std::string> ids(const std::vector<Violation>& vs) {
  std::vector<std::string> out;
  for (const auto& v : vs) out.push_back(v.constraint_id);
  return out;
}

}  // namespace

TEST(Instantiate, EverySeedSatisfiesConstraints) {
  for (const auto& d : envdt::testing::devices()) {
    const auto& m = fixture(d);
    auto params = param_table(m);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      auto inst = instantiate(m, seed, params);
      auto v = check_constraints(m, inst, params);
      ASSERT_TRUE(v.empty()) << d << " seed " << seed << ": " << v.front().constraint_id << " "
                             << v.front().explanation;
    }
  }
}

TEST(Instantiate, BatteryLevelWithinBounds) {
  const auto& m = fixture("karie");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto inst = instantiate(m, seed, param_table(m));
    for (const auto& i : inst.instances()) {
      if (i.cls != "Battery") continue;
      double level = as_double(i.values.at("level"));
      EXPECT_GE(level, 0.0);
      EXPECT_LE(level, 100.0);
    }
  }
}

TEST(Instantiate, DevicesPerPatientHonoursN) {
  const auto& m = fixture("karie");
  for (std::int64_t n : {1, 2, 4}) {
    auto params = param_table(m, {{"N", Value{n}}});
    std::set<std::size_t> sizes;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      auto inst = instantiate(m, seed, params);
      for (const auto& i : inst.instances()) {
        if (i.cls != "Patient") continue;
        auto devs = inst.targets(i.id, "devices");
        EXPECT_GE(devs.size(), 1u);
        EXPECT_LE(devs.size(), static_cast<std::size_t>(n));
        sizes.insert(devs.size());
      }
    }
    EXPECT_EQ(sizes.size(), static_cast<std::size_t>(n)) << "every count 1..N should appear";
  }
}

TEST(Instantiate, SeededDeterminism) {
  const auto& m = fixture("medido");
  auto a = instantiate(m, 31, param_table(m));
  auto b = instantiate(m, 31, param_table(m));
  auto c = instantiate(m, 32, param_table(m));
  EXPECT_EQ(a, b);
  EXPECT_EQ(instance_records(a), instance_records(b));
  EXPECT_NE(instance_records(a), instance_records(c));
}

TEST(Instantiate, InstanceIdsAreClassAndOrdinal) {
  auto inst = instantiate(fixture("pilly"), 5, param_table(fixture("pilly")));
  std::map<std::string, int> next;
  for (const auto& i : inst.instances()) {
    EXPECT_EQ(i.id, i.cls + "#" + std::to_string(++next[i.cls]));
  }
  EXPECT_EQ(inst.revision(), 0u);
}

TEST(Instantiate, UnsatisfiableUniquenessFails) {
  auto m = envdt::testing::parse_or_die(R"(model Tight;
component Owner <<User>> { property uid: int; assoc items -> Item [3..3]; }
component Item { property code: int in [1, 2]; }
constraint U on Owner: self.items->forAll(a, b | a.code <> b.code);
)");
  EXPECT_THROW(instantiate(m, 1, param_table(m)), UnsatisfiableConstraints);
}

TEST(Classify, KarieShapes) {
  const auto& m = fixture("karie");
  auto params = param_table(m);
  std::map<std::string, ConstraintKind> kinds;
  for (const auto& c : m.constraints) kinds[c.id] = classify_constraint(c, params).kind;
  EXPECT_EQ(kinds.at("C1"), ConstraintKind::Range);
  EXPECT_EQ(kinds.at("C2"), ConstraintKind::Unique);
  EXPECT_EQ(kinds.at("C3"), ConstraintKind::Positive);
  EXPECT_EQ(kinds.at("C4"), ConstraintKind::Cardinality);
  PropertyDomains domains(m, params);
  EXPECT_EQ(domains.interval("Battery", "level"), (std::pair<double, double>{0.0, 100.0}));
}

TEST(CheckConstraints, DuplicateDeviceNumbersViolateUniqueness) {
  const auto& m = fixture("karie");
  auto params = param_table(m);
  for (std::uint64_t seed = 0;; ++seed) {
    auto inst = instantiate(m, seed, params);
    const auto* patient = inst.first_of("Patient");
    auto devs = inst.targets(patient->id, "devices");
    if (devs.size() < 2) continue;
    inst.find(devs[1])->values["number"] = inst.find(devs[0])->values.at("number");
    auto v = check_constraints(m, inst, params);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].constraint_id, "C2");
    EXPECT_EQ(v[0].instance_id, patient->id);
    break;
  }
}

TEST(CheckConstraints, ZeroUidViolatesPositivity) {
  const auto& m = fixture("karie");
  auto params = param_table(m);
  auto inst = instantiate(m, 3, params);
  EXPECT_TRUE(check_constraints(m, inst, params).empty());
  inst.find(inst.first_of("Patient")->id)->values["uid"] = std::int64_t{0};
  EXPECT_EQ(ids(check_constraints(m, inst, params)), std::vector<std::string>{"C3"});
}

TEST(ApplyUpdate, InRangeCommitsAndBumpsRevision) {
  const auto& m = fixture("karie");
  auto params = param_table(m);
  auto inst = instantiate(m, 8, params);
  std::string battery = inst.first_of("Battery")->id;
  ASSERT_TRUE(apply_update(inst, m, PropertyUpdate{battery, "level", 100.0}, params).committed);
  auto out = apply_update(inst, m, PropertyUpdate{battery, "level", 50.0}, params);
  EXPECT_TRUE(out.committed);
  EXPECT_EQ(inst.revision(), 2u);
  EXPECT_EQ(as_double(inst.find(battery)->values.at("level")), 50.0);
}

TEST(ApplyUpdate, OutOfRangeRejectedCitingC1) {
  const auto& m = fixture("karie");
  auto params = param_table(m);
  auto inst = instantiate(m, 8, params);
  const auto before = inst;
  std::string battery = inst.first_of("Battery")->id;
  auto out = apply_update(inst, m, PropertyUpdate{battery, "level", 150.0}, params);
  EXPECT_FALSE(out.committed);
  auto cited = out.violated_ids();
  EXPECT_NE(std::find(cited.begin(), cited.end(), "C1"), cited.end());
  EXPECT_EQ(inst, before);
}

TEST(ApplyUpdate, RemovingLastDeviceRejected) {
  const auto& m = fixture("karie");
  auto params = param_table(m);
  auto inst = instantiate(m, 8, params);
  std::string patient = inst.first_of("Patient")->id;
  auto devs = inst.targets(patient, "devices");
  for (std::size_t i = 0; i + 1 < devs.size(); ++i) {
    ASSERT_TRUE(apply_update(inst, m, LinkUpdate{false, {patient, "devices", devs[i]}}, params).committed);
  }
  auto out = apply_update(inst, m, LinkUpdate{false, {patient, "devices", devs.back()}}, params);
  EXPECT_FALSE(out.committed);
  auto cited = out.violated_ids();
  EXPECT_NE(std::find(cited.begin(), cited.end(), "C4"), cited.end());
  EXPECT_EQ(inst.targets(patient, "devices").size(), 1u);
}

TEST(ApplyUpdate, MissingTargetThrows) {
  const auto& m = fixture("pilly");
  auto params = param_table(m);
  auto inst = instantiate(m, 1, params);
  EXPECT_THROW(apply_update(inst, m, PropertyUpdate{"Ghost#1", "level", 1.0}, params), std::invalid_argument);
  EXPECT_THROW(apply_update(inst, m, PropertyUpdate{inst.first_of("Battery")->id, "nope", 1.0}, params),
               std::invalid_argument);
}

TEST(ApplyUpdate, RandomSequencesStayConsistent) {
  std::mt19937_64 rng(4242);
  for (const auto& d : envdt::testing::devices()) {
    const auto& m = fixture(d);
    auto params = param_table(m);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      auto inst = instantiate(m, seed, params);
      std::vector<std::string> all_ids;
      for (const auto& i : inst.instances()) all_ids.push_back(i.id);
      std::uint64_t committed = 0;
      for (int step = 0; step < 200; ++step) {
        const auto& id = all_ids[std::uniform_int_distribution<std::size_t>(0, all_ids.size() - 1)(rng)];
        const Instance* target = inst.find(id);
        const auto* cls = m.find_class(target->cls);
        std::vector<const PropertyDecl*> numeric;
        for (const auto& p : cls->properties) {
          if (p.type == PrimitiveType::Int || p.type == PrimitiveType::Real) numeric.push_back(&p);
        }
        Update u;
        if (!numeric.empty() && std::bernoulli_distribution(0.8)(rng)) {
          const auto* p = numeric[std::uniform_int_distribution<std::size_t>(0, numeric.size() - 1)(rng)];
          double raw = std::uniform_real_distribution<double>(-20.0, 12000.0)(rng);
          Value v = p->type == PrimitiveType::Int ? Value{static_cast<std::int64_t>(raw)} : Value{raw};
          u = PropertyUpdate{id, p->name, v};
        } else if (!cls->associations.empty()) {
          const auto& a = cls->associations.front();
          auto targets = inst.targets(id, a.role);
          if (!targets.empty() && std::bernoulli_distribution(0.5)(rng)) {
            u = LinkUpdate{false, {id, a.role, targets.front()}};
          } else {
            const Instance* other = inst.first_of(a.target);
            if (!other) continue;
            u = LinkUpdate{true, {id, a.role, other->id}};
          }
        } else {
          continue;
        }
        if (apply_update(inst, m, u, params).committed) ++committed;
        ASSERT_TRUE(check_constraints(m, inst, params).empty()) << d << " seed " << seed << " step " << step;
      }
      EXPECT_EQ(inst.revision(), committed);
    }
  }
}

TEST(Records, OneLinePerInstanceAndLinkPlusMeta) {
  auto inst = instantiate(fixture("karie"), 2, param_table(fixture("karie")));
  auto text = instance_records(inst);
  auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  EXPECT_EQ(lines, 1 + inst.instances().size() + inst.links().size());
}
