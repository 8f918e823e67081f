#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spinsim {

// C2v irreducible representations; EHalf is the double-group representation.
enum class Irrep : std::uint8_t { A1, A2, B1, B2, EHalf };

// Zero-field triplet basis labels |s_x>, |s_y>, |s_z>.
enum class SpinAxis : std::uint8_t { X = 0, Y = 1, Z = 2 };

enum class Polarization : std::uint8_t { X, Y, Z, Forbidden };

enum class GroundSpin : std::uint8_t { Singlet, Triplet };

enum class DiagramClass : std::uint8_t { I, II, III, IV, V };

std::string_view to_string(Irrep irrep);
std::string_view to_string(SpinAxis axis);
std::string_view to_string(Polarization polarization);
std::string_view to_string(GroundSpin ground);
std::string_view to_string(DiagramClass cls);
GroundSpin parse_ground_spin(std::string_view text);

// Normalized ISC selection weights (p_x, p_y, p_z) over the zero-field
// triplet basis.
class SelectionVector {
 public:
  SelectionVector() : p_{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0} {}
  explicit SelectionVector(const std::array<double, 3>& p);

  static SelectionVector nonselective() { return {}; }
  static SelectionVector sharp(SpinAxis axis);

  double operator[](std::size_t i) const { return p_[i]; }
  double operator[](SpinAxis axis) const { return p_[static_cast<std::size_t>(axis)]; }
  const std::array<double, 3>& values() const { return p_; }

  bool is_nonselective() const;
  // Exactly one axis carries all the weight.
  std::optional<SpinAxis> sharp_axis() const;
  // Axes carrying weight, empty for the nonselective vector.
  std::vector<SpinAxis> selective_axes() const;

  // (1-2 eps) on the allowed axis, eps elsewhere. Only sharp vectors relax;
  // anything else is returned unchanged.
  SelectionVector relaxed(double epsilon) const;

  friend bool operator==(const SelectionVector&, const SelectionVector&) = default;

 private:
  std::array<double, 3> p_;
};

Irrep irrep_product(Irrep a, Irrep b);
Polarization optical_polarization(Irrep initial, Irrep final);
Irrep spin_axis_irrep(SpinAxis axis);
Irrep spin_orbit_irrep(Irrep orbital, SpinAxis axis);

// Selection vector for an ISC between a triplet of orbital symmetry
// `triplet_orbital` and a singlet of symmetry `singlet_orbital`.
SelectionVector isc_selection_vector(Irrep triplet_orbital, Irrep singlet_orbital,
                                     std::optional<double> epsilon = std::nullopt);

struct LevelDiagram {
  GroundSpin ground = GroundSpin::Singlet;
  std::string id;  // e.g. "singlet-b", "triplet-e", "triplet-g-v2"
  char letter = 'a';
  int variant = 1;  // 1 = main coupling scheme; 2, 3 = alternate m' schemes

  Irrep ground_orbital = Irrep::A1;
  Irrep excited_orbital = Irrep::A1;
  Irrep metastable_orbital = Irrep::A1;

  SelectionVector m_prime;  // ES -> metastable (Gamma_ISC1)
  SelectionVector m;        // metastable -> GS (Gamma_ISC2)
  Polarization emission = Polarization::X;

  // Alternate m' schemes for diagrams whose upper ISC can pass through more
  // than one singlet (triplet-GS g and h).
  std::vector<SelectionVector> alternate_m_prime;
};

std::vector<LevelDiagram> enumerate_level_diagrams(GroundSpin ground);

// Diagram `base` with m' replaced by alternate scheme `variant` (2-based, as
// in the id suffix "-v2").
LevelDiagram diagram_variant(const LevelDiagram& base, int variant);

// Every diagram including the alternate-m' variants.
std::vector<LevelDiagram> all_level_diagrams();

// Lookup by id ("singlet-b", "triplet-g-v3"). Throws ValidationError.
LevelDiagram find_diagram(std::string_view id);

// Class I-V assignment for triplet-GS diagrams, decided from the supports of
// (m', m). Singlet-GS diagrams have no class.
std::optional<DiagramClass> classify(const LevelDiagram& diagram);

}  // namespace spinsim
