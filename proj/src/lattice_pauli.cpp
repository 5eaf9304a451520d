#include "quench/lattice_pauli.hpp"

#include <algorithm>
#include <set>

namespace quench {

using cplx = std::complex<double>;

char letter_to_char(PauliLetter p) {
  switch (p) {
    case PauliLetter::X: return 'X';
    case PauliLetter::Y: return 'Y';
    case PauliLetter::Z: return 'Z';
  }
  return '?';
}

PauliLetter letter_from_char(char c) {
  switch (c) {
    case 'X': return PauliLetter::X;
    case 'Y': return PauliLetter::Y;
    case 'Z': return PauliLetter::Z;
  }
  throw std::invalid_argument("not a Pauli letter: " + std::string(1, c));
}

void Lattice::validate() const {
  if (rows < 1 || cols < 1) throw InvalidLattice("lattice dimensions must be positive");
  if (periodic && (rows < 3 || cols < 3)) {
    throw InvalidLattice(
        "periodic boundaries need rows >= 3 and cols >= 3; smaller wraps "
        "create duplicate or self-loop edges");
  }
}

std::vector<std::pair<int, int>> Lattice::edges() const {
  validate();
  std::set<std::pair<int, int>> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int a = site_index(r, c);
      if (c + 1 < cols || periodic) {
        int b = site_index(r, (c + 1) % cols);
        if (a != b) out.insert({std::min(a, b), std::max(a, b)});
      }
      if (r + 1 < rows || periodic) {
        int b = site_index((r + 1) % rows, c);
        if (a != b) out.insert({std::min(a, b), std::max(a, b)});
      }
    }
  }
  return {out.begin(), out.end()};
}

std::string PauliTerm::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (i) s += ' ';
    s += letter_to_char(letters[i]);
    s += std::to_string(sites[i]);
  }
  return s;
}

TermTable::TermTable(Lattice lattice) : lattice_(lattice) {
  lattice_.validate();
  const int n = lattice_.sites();
  terms_.reserve(3 * n);
  for (int s = 0; s < n; ++s) {
    for (int p = 0; p < 3; ++p) {
      terms_.push_back(PauliTerm{{s}, {static_cast<PauliLetter>(p)}});
    }
  }
  for (const auto& [a, b] : lattice_.edges()) {
    for (int pa = 0; pa < 3; ++pa) {
      for (int pb = 0; pb < 3; ++pb) {
        terms_.push_back(PauliTerm{
            {a, b}, {static_cast<PauliLetter>(pa), static_cast<PauliLetter>(pb)}});
      }
    }
  }
}

int TermTable::index_of(const PauliTerm& term) const {
  auto it = std::find(terms_.begin(), terms_.end(), term);
  if (it == terms_.end()) throw std::invalid_argument("term not in table: " + term.to_string());
  return static_cast<int>(it - terms_.begin());
}

int TermTable::z_term_index(int site) const { return 3 * site + static_cast<int>(PauliLetter::Z); }

int TermTable::zz_term_index(int site_a, int site_b) const {
  PauliTerm t{{std::min(site_a, site_b), std::max(site_a, site_b)},
              {PauliLetter::Z, PauliLetter::Z}};
  return index_of(t);
}

nlohmann::json TermTable::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : terms_) {
    std::string letters;
    for (auto p : t.letters) letters += letter_to_char(p);
    terms.push_back({{"sites", t.sites}, {"letters", letters}});
  }
  return {{"lattice", {{"rows", lattice_.rows}, {"cols", lattice_.cols}, {"periodic", lattice_.periodic}}},
          {"l", l()},
          {"terms", terms}};
}

TermTable build_term_table(const Lattice& lattice) { return TermTable(lattice); }

Eigen::MatrixXcd term_matrix(const PauliTerm& term, int n) {
  if (n > kMaxDenseQubits) {
    throw ResourceError("dense matrices capped at n <= " + std::to_string(kMaxDenseQubits));
  }
  for (int s : term.sites) {
    if (s < 0 || s >= n) throw std::invalid_argument("term site out of range");
  }
  const std::int64_t dim = std::int64_t{1} << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);

  // X and Y flip the site bit; Y and Z carry bit-dependent phases.
  std::int64_t flip = 0;
  for (std::size_t i = 0; i < term.sites.size(); ++i) {
    if (term.letters[i] != PauliLetter::Z) flip |= std::int64_t{1} << term.sites[i];
  }
  for (std::int64_t col = 0; col < dim; ++col) {
    cplx phase(1.0, 0.0);
    for (std::size_t i = 0; i < term.sites.size(); ++i) {
      const bool bit = (col >> term.sites[i]) & 1;
      switch (term.letters[i]) {
        case PauliLetter::X: break;
        case PauliLetter::Y: phase *= bit ? cplx(0, -1) : cplx(0, 1); break;
        case PauliLetter::Z: phase *= bit ? -1.0 : 1.0; break;
      }
    }
    m(col ^ flip, col) = phase;
  }
  return m;
}

int z_conjugation_sign(const PauliTerm& term, const std::vector<int>& mask) {
  int sign = 1;
  for (std::size_t i = 0; i < term.sites.size(); ++i) {
    const int s = term.sites[i];
    if (s < 0 || static_cast<std::size_t>(s) >= mask.size()) {
      throw std::invalid_argument("mask shorter than term support");
    }
    if (mask[s] && term.letters[i] != PauliLetter::Z) sign = -sign;
  }
  return sign;
}

Eigen::MatrixXcd z_mask_matrix(const std::vector<int>& mask) {
  const int n = static_cast<int>(mask.size());
  if (n > kMaxDenseQubits) throw ResourceError("mask too wide for dense cap");
  const std::int64_t dim = std::int64_t{1} << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::int64_t z = 0; z < dim; ++z) {
    int par = 0;
    for (int s = 0; s < n; ++s) {
      if (mask[s] && ((z >> s) & 1)) par ^= 1;
    }
    m(z, z) = par ? -1.0 : 1.0;
  }
  return m;
}

}  // namespace quench
