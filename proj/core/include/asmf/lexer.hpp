#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asmf/diag.hpp"

namespace asmf {

enum class Tok {
  // literals and names
  Int,       // 42
  LowerId,   // function / macro names
  UpperId,   // constants, domain names
  VarId,     // $x (text keeps the sigil)
  // keywords
  KwAsm, KwSignature, KwDefinitions, KwInit,
  KwDomain, KwAgentset,
  KwStatic, KwMonitored, KwControlled, KwDerived,
  KwFunction, KwRule, KwMain, KwInvariant, KwAgent,
  KwIf, KwThen, KwElse, KwEndif,
  KwPar, KwEndpar,
  KwForall, KwWith, KwDo,
  KwChoose, KwIfnone, KwEndchoose,
  KwLet, KwIn, KwEndlet,
  KwSwitch, KwCase, KwOtherwise, KwEndswitch,
  KwSkip, KwProgram, KwPick,
  KwAnd, KwOr, KwNot, KwImplies, KwIsDef,
  KwTrue, KwFalse, KwUndef, KwSelf,
  // punctuation
  LParen, RParen, LBracket, RBracket, LBrace, RBrace,
  Comma, Colon, Assign,          // ( ) [ ] { } , : :=
  Eq, Ne, Lt, Le, Gt, Ge,        // = != < <= > >=
  Plus, Minus, Star,             // + - *
  DotDot, Arrow,                 // .. ->
  End,                           // end of input
  Error,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;    // source text (identifier spelling, digits)
  uint32_t begin = 0;  // byte offsets into the source
  uint32_t end = 0;
  uint32_t line = 1;   // 1-based
  uint32_t column = 1;
};

struct LexResult {
  std::vector<Token> tokens; // always terminated by an End token
  std::vector<Diagnostic> errors;
};

LexResult lex(const std::string& source);

const char* token_name(Tok t);

} // namespace asmf
