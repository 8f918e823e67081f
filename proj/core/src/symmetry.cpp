#include "spinsim/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spinsim/errors.hpp"

namespace spinsim {
namespace {

// A1, A2, B1, B2 form a Klein four-group; with this bit encoding the product
// is XOR.
std::uint8_t code(Irrep x) {
  if (x == Irrep::EHalf) throw ValidationError("E_1/2 is a double-group representation");
  return static_cast<std::uint8_t>(x);
}

constexpr std::array<Irrep, 4> kSingleGroup{Irrep::A1, Irrep::A2, Irrep::B1, Irrep::B2};
constexpr std::array<SpinAxis, 3> kAxes{SpinAxis::X, SpinAxis::Y, SpinAxis::Z};

}  // namespace

std::string_view to_string(Irrep irrep) {
  switch (irrep) {
    case Irrep::A1: return "A1";
    case Irrep::A2: return "A2";
    case Irrep::B1: return "B1";
    case Irrep::B2: return "B2";
    case Irrep::EHalf: return "E1/2";
  }
  return "?";
}

std::string_view to_string(SpinAxis axis) {
  switch (axis) {
    case SpinAxis::X: return "s_x";
    case SpinAxis::Y: return "s_y";
    case SpinAxis::Z: return "s_z";
  }
  return "?";
}

std::string_view to_string(Polarization polarization) {
  switch (polarization) {
    case Polarization::X: return "x";
    case Polarization::Y: return "y";
    case Polarization::Z: return "z";
    case Polarization::Forbidden: return "forbidden";
  }
  return "?";
}

std::string_view to_string(GroundSpin ground) {
  return ground == GroundSpin::Singlet ? "singlet" : "triplet";
}

std::string_view to_string(DiagramClass cls) {
  switch (cls) {
    case DiagramClass::I: return "I";
    case DiagramClass::II: return "II";
    case DiagramClass::III: return "III";
    case DiagramClass::IV: return "IV";
    case DiagramClass::V: return "V";
  }
  return "?";
}

GroundSpin parse_ground_spin(std::string_view text) {
  if (text == "singlet") return GroundSpin::Singlet;
  if (text == "triplet") return GroundSpin::Triplet;
  throw ValidationError("ground spin must be 'singlet' or 'triplet', got '" + std::string(text) + "'");
}

SelectionVector::SelectionVector(const std::array<double, 3>& p) : p_(p) {
  double sum = 0.0;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("selection weights must be finite and non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("selection weights must sum to 1");
}

SelectionVector SelectionVector::sharp(SpinAxis axis) {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  p[static_cast<std::size_t>(axis)] = 1.0;
  return SelectionVector(p);
}

bool SelectionVector::is_nonselective() const {
  return std::all_of(p_.begin(), p_.end(), [](double v) { return std::abs(v - 1.0 / 3.0) < 1e-12; });
}

std::optional<SpinAxis> SelectionVector::sharp_axis() const {
  for (SpinAxis axis : kAxes)
    if (std::abs((*this)[axis] - 1.0) < 1e-12) return axis;
  return std::nullopt;
}

std::vector<SpinAxis> SelectionVector::selective_axes() const {
  std::vector<SpinAxis> out;
  if (is_nonselective()) return out;
  for (SpinAxis axis : kAxes)
    if ((*this)[axis] > 1e-12) out.push_back(axis);
  return out;
}

SelectionVector SelectionVector::relaxed(double epsilon) const {
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon > 0.5)
    throw ValidationError("selectivity relaxation must lie in [0, 1/2]");
  const auto axis = sharp_axis();
  if (!axis) return *this;
  std::array<double, 3> p{epsilon, epsilon, epsilon};
  p[static_cast<std::size_t>(*axis)] = 1.0 - 2.0 * epsilon;
  return SelectionVector(p);
}

Irrep irrep_product(Irrep a, Irrep b) {
  return static_cast<Irrep>(code(a) ^ code(b));
}

Polarization optical_polarization(Irrep initial, Irrep final) {
  switch (irrep_product(initial, final)) {
    case Irrep::A1: return Polarization::X;
    case Irrep::B1: return Polarization::Y;
    case Irrep::B2: return Polarization::Z;
    default: return Polarization::Forbidden;
  }
}

Irrep spin_axis_irrep(SpinAxis axis) {
  switch (axis) {
    case SpinAxis::X: return Irrep::A2;
    case SpinAxis::Y: return Irrep::B2;
    case SpinAxis::Z: return Irrep::B1;
  }
  return Irrep::A1;
}

Irrep spin_orbit_irrep(Irrep orbital, SpinAxis axis) {
  return irrep_product(orbital, spin_axis_irrep(axis));
}

SelectionVector isc_selection_vector(Irrep triplet_orbital, Irrep singlet_orbital,
                                     std::optional<double> epsilon) {
  code(singlet_orbital);
  std::optional<SpinAxis> allowed;
  for (SpinAxis axis : kAxes)
    if (spin_orbit_irrep(triplet_orbital, axis) == singlet_orbital) allowed = axis;
  if (!allowed) return SelectionVector::nonselective();
  const SelectionVector sharp = SelectionVector::sharp(*allowed);
  return epsilon ? sharp.relaxed(*epsilon) : sharp;
}

namespace {

LevelDiagram make_singlet_diagram(char letter, Irrep metastable) {
  LevelDiagram d;
  d.ground = GroundSpin::Singlet;
  d.letter = letter;
  d.id = std::string("singlet-") + letter;
  d.ground_orbital = Irrep::A1;
  d.excited_orbital = metastable;  // 1X shares the orbital symmetry of 3X
  d.metastable_orbital = metastable;
  // No spin-orbit coupling links 1X and 3X of equal orbital symmetry.
  d.m_prime = isc_selection_vector(metastable, d.excited_orbital);
  d.m = isc_selection_vector(metastable, d.ground_orbital);
  d.emission = optical_polarization(d.ground_orbital, d.excited_orbital);
  return d;
}

struct TripletSpec {
  char letter;
  Irrep ground;   // 3X
  Irrep excited;  // 3Y
};

// Lettering follows the appendix captions; see README for the table.
constexpr std::array<TripletSpec, 8> kTripletSpecs{{
    {'a', Irrep::A1, Irrep::A1},
    {'b', Irrep::A2, Irrep::A2},
    {'c', Irrep::B1, Irrep::B1},
    {'d', Irrep::B2, Irrep::B2},
    {'e', Irrep::A1, Irrep::B1},
    {'f', Irrep::B1, Irrep::A1},
    {'g', Irrep::A2, Irrep::B2},
    {'h', Irrep::B2, Irrep::A2},
}};

LevelDiagram make_triplet_diagram(const TripletSpec& spec) {
  LevelDiagram d;
  d.ground = GroundSpin::Triplet;
  d.letter = spec.letter;
  d.id = std::string("triplet-") + spec.letter;
  d.ground_orbital = spec.ground;
  d.excited_orbital = spec.excited;
  d.metastable_orbital = Irrep::A1;
  d.emission = optical_polarization(spec.ground, spec.excited);

  // Lower ISC always ends in the lowest singlet 1A1.
  d.m = isc_selection_vector(spec.ground, Irrep::A1);
  const SelectionVector via_lowest = isc_selection_vector(spec.excited, Irrep::A1);
  // The companion singlet 1X (same orbital symmetry as the ground triplet)
  // lies close to 1A1 and offers a second upper ISC channel.
  const SelectionVector via_companion = isc_selection_vector(spec.excited, spec.ground);

  if (via_lowest.is_nonselective() && !via_companion.is_nonselective()) {
    d.m_prime = via_companion;
  } else {
    d.m_prime = via_lowest;
  }
  if (!via_lowest.is_nonselective() && !via_companion.is_nonselective() &&
      !(via_lowest == via_companion)) {
    std::array<double, 3> mixed{};
    for (std::size_t i = 0; i < 3; ++i) mixed[i] = 0.5 * (via_lowest[i] + via_companion[i]);
    d.alternate_m_prime = {SelectionVector(mixed), via_companion};
  }
  return d;
}

}  // namespace

std::vector<LevelDiagram> enumerate_level_diagrams(GroundSpin ground) {
  std::vector<LevelDiagram> out;
  if (ground == GroundSpin::Singlet) {
    // In-plane dipoles: 1A1 <-> 1X with X in {A1 (x), B1 (y)}.
    out.push_back(make_singlet_diagram('a', Irrep::A1));
    out.push_back(make_singlet_diagram('b', Irrep::B1));
    return out;
  }
  for (const TripletSpec& spec : kTripletSpecs) {
    const Polarization p = optical_polarization(spec.ground, spec.excited);
    if (p != Polarization::X && p != Polarization::Y) continue;
    out.push_back(make_triplet_diagram(spec));
  }
  return out;
}

LevelDiagram diagram_variant(const LevelDiagram& base, int variant) {
  if (variant == 1) return base;
  const auto index = static_cast<std::size_t>(variant - 2);
  if (variant < 2 || index >= base.alternate_m_prime.size())
    throw ValidationError("diagram " + base.id + " has no coupling variant " + std::to_string(variant));
  LevelDiagram d = base;
  d.variant = variant;
  d.id = base.id + "-v" + std::to_string(variant);
  d.m_prime = base.alternate_m_prime[index];
  d.alternate_m_prime.clear();
  return d;
}

std::vector<LevelDiagram> all_level_diagrams() {
  std::vector<LevelDiagram> out;
  for (GroundSpin g : {GroundSpin::Singlet, GroundSpin::Triplet}) {
    for (const LevelDiagram& d : enumerate_level_diagrams(g)) {
      out.push_back(d);
      for (std::size_t k = 0; k < d.alternate_m_prime.size(); ++k)
        out.push_back(diagram_variant(d, static_cast<int>(k) + 2));
    }
  }
  return out;
}

LevelDiagram find_diagram(std::string_view id) {
  for (LevelDiagram& d : all_level_diagrams())
    if (d.id == id) return d;
  throw ValidationError("unknown diagram id '" + std::string(id) + "'");
}

std::optional<DiagramClass> classify(const LevelDiagram& diagram) {
  if (diagram.ground != GroundSpin::Triplet) return std::nullopt;
  const auto upper = diagram.m_prime.selective_axes();
  const auto lower = diagram.m.selective_axes();
  std::set<SpinAxis> all(upper.begin(), upper.end());
  all.insert(lower.begin(), lower.end());

  if (all.empty()) return DiagramClass::I;
  const bool has_z = all.count(SpinAxis::Z) > 0;
  if (has_z && all.size() == 1) return DiagramClass::III;
  if (has_z) return DiagramClass::V;
  // Only s_x / s_y involved from here on.
  if (upper.size() == 1 && lower.size() == 1) {
    return upper.front() == lower.front() ? DiagramClass::II : DiagramClass::IV;
  }
  throw ValidationError("diagram " + diagram.id + " does not fall into a known ISC class");
}

}  // namespace spinsim
