#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "yieldcast/common.hpp"

// SMILES tokenizer and structural parser. Tokenization is lossless:
// concatenating the token texts reproduces the input exactly. The parser
// recovers atoms, bonds and ring counts; stereo markers are tokenized but
// carry no meaning here, and valence is not checked.

namespace yieldcast::smiles {

enum class TokenKind {
  Atom,
  BracketAtom,
  Bond,
  BranchOpen,
  BranchClose,
  RingClosure,
  Dot,
  Separator,
};

struct Token {
  TokenKind kind;
  std::string text;
};

struct TokenSequence {
  std::vector<Token> tokens;
  std::string source;

  std::size_t size() const { return tokens.size(); }
};

enum class BondOrder { Single, Double, Triple, Aromatic };

struct Atom {
  std::string element;
  bool aromatic = false;
  int formal_charge = 0;
  int explicit_h = 0;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::Single;
};

struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  int ring_count = 0;
};

// Token grammar: organic-subset atoms {B,C,N,O,P,S,F,Cl,Br,I} and aromatic
// {b,c,n,o,p,s}; bracket atoms as opaque [..] tokens; bonds {- = # / \ : ~};
// ring closures 1-9 and %nn; branch parens; `.`; `>`.
// Errors: UnclosedBracket, UnknownCharacter.
TokenSequence tokenize(const std::string& smiles);

// Builds the molecular graph. Adjacent atoms bond with order Single, or
// Aromatic when both are aromatic; explicit bond tokens override. Stereo
// slashes and `~` are treated as single bonds.
// Errors: UnbalancedBranch, UnmatchedRingClosure, DanglingBond.
Molecule parse(const TokenSequence& tokens);

Molecule parse(const std::string& smiles);

// Joins components with `.` in the order given (the dataset schema order).
// Every component must tokenize; the empty list is an error.
std::string assemble_reaction(const std::vector<std::string>& components);

struct Vocab {
  std::map<std::string, int> token_to_id;

  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kUnk = 2;

  int size() const { return static_cast<int>(token_to_id.size()) + 3; }
  int id_of(const std::string& text) const;
};

// Specials ∪ distinct token texts sorted lexicographically, ids dense from 3.
Vocab build_vocab(const std::vector<TokenSequence>& corpus);

struct EncodedSequence {
  std::vector<int> ids;             // length max_len, ids[0] = CLS
  std::vector<std::uint8_t> mask;   // 1 for CLS + real tokens, 0 for PAD
};

// [CLS] + token ids (UNK for unseen) padded to max_len. A sequence that does
// not fit is a SequenceTooLong error; nothing is truncated silently.
EncodedSequence encode(const TokenSequence& tokens, const Vocab& vocab,
                       int max_len);

}  // namespace yieldcast::smiles
