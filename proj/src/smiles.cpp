#include "yieldcast/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

namespace yieldcast::smiles {

namespace {

bool is_organic_upper(char c) {
  switch (c) {
    case 'B': case 'C': case 'N': case 'O': case 'P': case 'S':
    case 'F': case 'I':
      return true;
    default:
      return false;
  }
}

bool is_aromatic_lower(char c) {
  switch (c) {
    case 'b': case 'c': case 'n': case 'o': case 'p': case 's':
      return true;
    default:
      return false;
  }
}

bool is_bond_char(char c) {
  switch (c) {
    case '-': case '=': case '#': case '/': case '\\': case ':': case '~':
      return true;
    default:
      return false;
  }
}

}  // namespace

TokenSequence tokenize(const std::string& smiles) {
  if (smiles.empty()) {
    fail(ErrorCode::UnknownCharacter, "empty SMILES string");
  }
  TokenSequence seq;
  seq.source = smiles;
  std::size_t i = 0;
  const std::size_t n = smiles.size();
  while (i < n) {
    char c = smiles[i];
    if (c == '[') {
      std::size_t close = smiles.find(']', i);
      if (close == std::string::npos) {
        fail(ErrorCode::UnclosedBracket,
             "no matching ']' for '[' at position " + std::to_string(i) +
                 " in \"" + smiles + "\"");
      }
      seq.tokens.push_back(
          {TokenKind::BracketAtom, smiles.substr(i, close - i + 1)});
      i = close + 1;
    } else if (c == 'C' && i + 1 < n && smiles[i + 1] == 'l') {
      seq.tokens.push_back({TokenKind::Atom, "Cl"});
      i += 2;
    } else if (c == 'B' && i + 1 < n && smiles[i + 1] == 'r') {
      seq.tokens.push_back({TokenKind::Atom, "Br"});
      i += 2;
    } else if (is_organic_upper(c) || is_aromatic_lower(c)) {
      seq.tokens.push_back({TokenKind::Atom, std::string(1, c)});
      ++i;
    } else if (c >= '1' && c <= '9') {
      seq.tokens.push_back({TokenKind::RingClosure, std::string(1, c)});
      ++i;
    } else if (c == '%') {
      if (i + 2 >= n || !std::isdigit(static_cast<unsigned char>(smiles[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(smiles[i + 2]))) {
        fail(ErrorCode::UnknownCharacter,
             "'%' must be followed by two digits, at position " +
                 std::to_string(i) + " in \"" + smiles + "\"");
      }
      seq.tokens.push_back({TokenKind::RingClosure, smiles.substr(i, 3)});
      i += 3;
    } else if (is_bond_char(c)) {
      seq.tokens.push_back({TokenKind::Bond, std::string(1, c)});
      ++i;
    } else if (c == '(') {
      seq.tokens.push_back({TokenKind::BranchOpen, "("});
      ++i;
    } else if (c == ')') {
      seq.tokens.push_back({TokenKind::BranchClose, ")"});
      ++i;
    } else if (c == '.') {
      seq.tokens.push_back({TokenKind::Dot, "."});
      ++i;
    } else if (c == '>') {
      seq.tokens.push_back({TokenKind::Separator, ">"});
      ++i;
    } else {
      fail(ErrorCode::UnknownCharacter,
           std::string("character '") + c + "' at position " +
               std::to_string(i) + " in \"" + smiles + "\"");
    }
  }
  return seq;
}

namespace {

// Bracket contents we cannot make sense of become an "?" atom rather than an
// error; the descriptor layout has an explicit other-element bucket and the
// data layer uses an opaque [None] placeholder for absent condition roles.
Atom parse_bracket(const std::string& text) {
  Atom fallback{"?", false, 0, 0};
  std::string body = text.substr(1, text.size() - 2);
  std::size_t i = 0;
  const std::size_t n = body.size();
  auto digits = [&]() {
    int value = 0;
    bool any = false;
    while (i < n && std::isdigit(static_cast<unsigned char>(body[i]))) {
      value = value * 10 + (body[i] - '0');
      ++i;
      any = true;
    }
    return any ? std::optional<int>(value) : std::nullopt;
  };

  digits();  // isotope, ignored
  if (i >= n) return fallback;

  Atom atom;
  char c = body[i];
  if (std::isupper(static_cast<unsigned char>(c))) {
    atom.element = std::string(1, c);
    ++i;
    if (i < n && std::islower(static_cast<unsigned char>(body[i]))) {
      // Two-letter symbol, except a lone trailing 'H' count marker ('Zn' vs
      // 'NH2'). Lowercase 'h' never starts an H count, so always element.
      atom.element += body[i];
      ++i;
    }
  } else if (std::islower(static_cast<unsigned char>(c))) {
    static const std::set<std::string> two = {"se", "as"};
    if (i + 1 < n && two.count(body.substr(i, 2)) > 0) {
      atom.element = body.substr(i, 2);
      atom.element[0] = static_cast<char>(std::toupper(atom.element[0]));
      i += 2;
    } else if (is_aromatic_lower(c)) {
      atom.element = std::string(1, static_cast<char>(std::toupper(c)));
      ++i;
    } else {
      return fallback;
    }
    atom.aromatic = true;
  } else {
    return fallback;
  }

  // chirality markers, ignored
  while (i < n && body[i] == '@') ++i;
  if (i + 1 < n && std::isupper(static_cast<unsigned char>(body[i])) &&
      std::isupper(static_cast<unsigned char>(body[i + 1]))) {
    static const std::set<std::string> chir = {"TH", "AL", "SP", "TB", "OH"};
    if (chir.count(body.substr(i, 2)) > 0 && i + 2 < n &&
        std::isdigit(static_cast<unsigned char>(body[i + 2]))) {
      i += 2;
      digits();
    }
  }

  if (i < n && body[i] == 'H') {
    ++i;
    atom.explicit_h = digits().value_or(1);
  }

  if (i < n && (body[i] == '+' || body[i] == '-')) {
    char sign = body[i];
    ++i;
    int magnitude = 1;
    if (auto d = digits()) {
      magnitude = *d;
    } else {
      while (i < n && body[i] == sign) {
        ++magnitude;
        ++i;
      }
    }
    atom.formal_charge = sign == '+' ? magnitude : -magnitude;
  }

  if (i < n && body[i] == ':') {
    ++i;
    digits();  // atom map, ignored
  }

  if (i != n) return fallback;
  return atom;
}

std::optional<BondOrder> bond_order_for(const std::string& text) {
  if (text == "-" || text == "/" || text == "\\" || text == "~") {
    return BondOrder::Single;
  }
  if (text == "=") return BondOrder::Double;
  if (text == "#") return BondOrder::Triple;
  if (text == ":") return BondOrder::Aromatic;
  return std::nullopt;
}

}  // namespace

Molecule parse(const TokenSequence& tokens) {
  Molecule mol;
  std::vector<int> branch_stack;
  // ring-closure label -> (atom index, explicit order at the opening, if any)
  std::map<std::string, std::pair<int, std::optional<BondOrder>>> open_rings;
  int prev_atom = -1;
  std::optional<BondOrder> pending_bond;

  auto default_order = [&](int a, int b) {
    return mol.atoms[a].aromatic && mol.atoms[b].aromatic ? BondOrder::Aromatic
                                                          : BondOrder::Single;
  };

  for (std::size_t t = 0; t < tokens.tokens.size(); ++t) {
    const Token& tok = tokens.tokens[t];
    switch (tok.kind) {
      case TokenKind::Atom:
      case TokenKind::BracketAtom: {
        Atom atom;
        if (tok.kind == TokenKind::Atom) {
          char c = tok.text[0];
          if (std::islower(static_cast<unsigned char>(c))) {
            atom.element = std::string(1, static_cast<char>(std::toupper(c)));
            atom.aromatic = true;
          } else {
            atom.element = tok.text;
          }
        } else {
          atom = parse_bracket(tok.text);
        }
        mol.atoms.push_back(atom);
        int index = static_cast<int>(mol.atoms.size()) - 1;
        if (prev_atom >= 0) {
          BondOrder order =
              pending_bond ? *pending_bond : default_order(prev_atom, index);
          mol.bonds.push_back({prev_atom, index, order});
        }
        pending_bond.reset();
        prev_atom = index;
        break;
      }
      case TokenKind::Bond: {
        if (pending_bond) {
          fail(ErrorCode::DanglingBond,
               "two consecutive bond tokens at token " + std::to_string(t));
        }
        if (prev_atom < 0) {
          fail(ErrorCode::DanglingBond,
               "bond token with no preceding atom at token " +
                   std::to_string(t));
        }
        pending_bond = bond_order_for(tok.text);
        break;
      }
      case TokenKind::RingClosure: {
        if (prev_atom < 0) {
          fail(ErrorCode::UnmatchedRingClosure,
               "ring closure '" + tok.text + "' with no preceding atom");
        }
        auto it = open_rings.find(tok.text);
        if (it == open_rings.end()) {
          open_rings.emplace(tok.text,
                             std::make_pair(prev_atom, pending_bond));
        } else {
          auto [other, open_order] = it->second;
          open_rings.erase(it);
          if (other == prev_atom) {
            fail(ErrorCode::UnmatchedRingClosure,
                 "ring closure '" + tok.text + "' bonds an atom to itself");
          }
          if (open_order && pending_bond && *open_order != *pending_bond) {
            fail(ErrorCode::UnmatchedRingClosure,
                 "conflicting bond orders on ring closure '" + tok.text + "'");
          }
          BondOrder order = pending_bond ? *pending_bond
                            : open_order ? *open_order
                                         : default_order(other, prev_atom);
          mol.bonds.push_back({other, prev_atom, order});
          mol.ring_count += 1;
        }
        pending_bond.reset();
        break;
      }
      case TokenKind::BranchOpen: {
        if (prev_atom < 0) {
          fail(ErrorCode::UnbalancedBranch,
               "branch opened before any atom at token " + std::to_string(t));
        }
        if (pending_bond) {
          fail(ErrorCode::DanglingBond,
               "bond token before '(' at token " + std::to_string(t));
        }
        branch_stack.push_back(prev_atom);
        break;
      }
      case TokenKind::BranchClose: {
        if (branch_stack.empty()) {
          fail(ErrorCode::UnbalancedBranch,
               "')' without matching '(' at token " + std::to_string(t));
        }
        if (pending_bond) {
          fail(ErrorCode::DanglingBond,
               "bond token before ')' at token " + std::to_string(t));
        }
        prev_atom = branch_stack.back();
        branch_stack.pop_back();
        break;
      }
      case TokenKind::Dot:
      case TokenKind::Separator: {
        if (pending_bond) {
          fail(ErrorCode::DanglingBond,
               "bond token before component break at token " +
                   std::to_string(t));
        }
        prev_atom = -1;
        break;
      }
    }
  }

  if (pending_bond) {
    fail(ErrorCode::DanglingBond, "trailing bond token");
  }
  if (!branch_stack.empty()) {
    fail(ErrorCode::UnbalancedBranch,
         std::to_string(branch_stack.size()) + " unclosed '('");
  }
  if (!open_rings.empty()) {
    fail(ErrorCode::UnmatchedRingClosure,
         "ring closure '" + open_rings.begin()->first + "' never closed");
  }
  return mol;
}

Molecule parse(const std::string& smiles) { return parse(tokenize(smiles)); }

std::string assemble_reaction(const std::vector<std::string>& components) {
  if (components.empty()) {
    fail(ErrorCode::EmptyComponentList, "no components to assemble");
  }
  std::string joined;
  for (std::size_t i = 0; i < components.size(); ++i) {
    tokenize(components[i]);  // validates
    if (i > 0) joined += '.';
    joined += components[i];
  }
  return joined;
}

int Vocab::id_of(const std::string& text) const {
  auto it = token_to_id.find(text);
  return it == token_to_id.end() ? kUnk : it->second;
}

Vocab build_vocab(const std::vector<TokenSequence>& corpus) {
  if (corpus.empty()) {
    fail(ErrorCode::EmptyCorpus, "cannot build a vocabulary from nothing");
  }
  std::set<std::string> texts;
  for (const auto& seq : corpus) {
    for (const auto& tok : seq.tokens) texts.insert(tok.text);
  }
  Vocab vocab;
  int next_id = 3;  // after PAD, CLS, UNK
  for (const auto& text : texts) {
    vocab.token_to_id.emplace(text, next_id++);
  }
  return vocab;
}

EncodedSequence encode(const TokenSequence& tokens, const Vocab& vocab,
                       int max_len) {
  if (max_len < 2) {
    fail(ErrorCode::SequenceTooLong, "max_len must be at least 2");
  }
  const std::size_t needed = tokens.size() + 1;
  if (needed > static_cast<std::size_t>(max_len)) {
    fail(ErrorCode::SequenceTooLong,
         std::to_string(tokens.size()) + " tokens + CLS exceed max_len " +
             std::to_string(max_len) + " for \"" + tokens.source + "\"");
  }
  EncodedSequence enc;
  enc.ids.assign(max_len, Vocab::kPad);
  enc.mask.assign(max_len, 0);
  enc.ids[0] = Vocab::kCls;
  enc.mask[0] = 1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    enc.ids[i + 1] = vocab.id_of(tokens.tokens[i].text);
    enc.mask[i + 1] = 1;
  }
  return enc;
}

}  // namespace yieldcast::smiles
