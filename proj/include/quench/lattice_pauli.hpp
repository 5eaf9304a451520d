#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace quench {

// Dense-matrix cap. Everything here verifies at desk scale; past this qubit
// count the 2^n x 2^n representation is no longer sensible.
inline constexpr int kMaxDenseQubits = 12;

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidLattice : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class PauliLetter : int { X = 0, Y = 1, Z = 2 };

char letter_to_char(PauliLetter p);
PauliLetter letter_from_char(char c);

// Rectangular 2D qubit lattice. Sites are indexed row-major in [0, rows*cols).
struct Lattice {
  int rows = 1;
  int cols = 1;
  bool periodic = false;

  int sites() const { return rows * cols; }
  int site_index(int r, int c) const { return r * cols + c; }

  // Unordered edges (a < b), sorted lexicographically, no duplicates.
  std::vector<std::pair<int, int>> edges() const;

  // Throws InvalidLattice if the invariants fail (periodic wrap needs >= 3
  // per wrapped dimension to avoid duplicate edges).
  void validate() const;

  bool operator==(const Lattice&) const = default;
};

// A geometrically-2-local Pauli term: one or two sites with a letter each.
// Sites are sorted ascending; 2-site terms live on a lattice edge.
struct PauliTerm {
  std::vector<int> sites;
  std::vector<PauliLetter> letters;

  bool operator==(const PauliTerm&) const = default;
  std::string to_string() const;
};

// All geometrically-2-local Pauli terms on a lattice, in canonical order:
// single-site terms first (site-major, letters X<Y<Z), then edge terms
// (edges lexicographic, letter pairs in X<Y<Z x X<Y<Z order).
class TermTable {
 public:
  explicit TermTable(Lattice lattice);

  const Lattice& lattice() const { return lattice_; }
  int n() const { return lattice_.sites(); }
  int l() const { return static_cast<int>(terms_.size()); }
  const std::vector<PauliTerm>& terms() const { return terms_; }
  const PauliTerm& term(int index) const { return terms_.at(index); }

  // Inverse of the canonical ordering; throws if the term is not in the table.
  int index_of(const PauliTerm& term) const;

  // Index of the single-site Z term at `site`, and of the ZZ term on an edge.
  int z_term_index(int site) const;
  int zz_term_index(int site_a, int site_b) const;

  nlohmann::json to_json() const;

 private:
  Lattice lattice_;
  std::vector<PauliTerm> terms_;
};

TermTable build_term_table(const Lattice& lattice);

// Dense 2^n x 2^n matrix of the term embedded in an n-qubit register.
// Hermitian, unitary, traceless.
Eigen::MatrixXcd term_matrix(const PauliTerm& term, int n);

// Sign eps with Z^y P Z^y = eps * P: one factor of -1 per site where the mask
// bit is set and the letter anticommutes with Z (X or Y).
int z_conjugation_sign(const PauliTerm& term, const std::vector<int>& mask);

// Dense Z^y on n qubits (diagonal +-1).
Eigen::MatrixXcd z_mask_matrix(const std::vector<int>& mask);

}  // namespace quench
