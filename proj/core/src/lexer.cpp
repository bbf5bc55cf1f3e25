#include "asmf/lexer.hpp"

#include <cctype>
#include <unordered_map>

namespace asmf {

namespace {

const std::unordered_map<std::string, Tok>& keyword_table() {
  static const std::unordered_map<std::string, Tok> table = {
      {"asm", Tok::KwAsm},
      {"signature", Tok::KwSignature},
      {"definitions", Tok::KwDefinitions},
      {"init", Tok::KwInit},
      {"domain", Tok::KwDomain},
      {"agentset", Tok::KwAgentset},
      {"static", Tok::KwStatic},
      {"monitored", Tok::KwMonitored},
      {"controlled", Tok::KwControlled},
      {"derived", Tok::KwDerived},
      {"function", Tok::KwFunction},
      {"rule", Tok::KwRule},
      {"main", Tok::KwMain},
      {"invariant", Tok::KwInvariant},
      {"agent", Tok::KwAgent},
      {"if", Tok::KwIf},
      {"then", Tok::KwThen},
      {"else", Tok::KwElse},
      {"endif", Tok::KwEndif},
      {"par", Tok::KwPar},
      {"endpar", Tok::KwEndpar},
      {"forall", Tok::KwForall},
      {"with", Tok::KwWith},
      {"do", Tok::KwDo},
      {"choose", Tok::KwChoose},
      {"ifnone", Tok::KwIfnone},
      {"endchoose", Tok::KwEndchoose},
      {"let", Tok::KwLet},
      {"in", Tok::KwIn},
      {"endlet", Tok::KwEndlet},
      {"switch", Tok::KwSwitch},
      {"case", Tok::KwCase},
      {"otherwise", Tok::KwOtherwise},
      {"endswitch", Tok::KwEndswitch},
      {"skip", Tok::KwSkip},
      {"program", Tok::KwProgram},
      {"pick", Tok::KwPick},
      {"and", Tok::KwAnd},
      {"or", Tok::KwOr},
      {"not", Tok::KwNot},
      {"implies", Tok::KwImplies},
      {"isDef", Tok::KwIsDef},
      {"true", Tok::KwTrue},
      {"false", Tok::KwFalse},
      {"undef", Tok::KwUndef},
      {"self", Tok::KwSelf},
  };
  return table;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

} // namespace

const char* token_name(Tok t) {
  switch (t) {
    case Tok::Int: return "integer";
    case Tok::LowerId: return "identifier";
    case Tok::UpperId: return "capitalized identifier";
    case Tok::VarId: return "variable";
    case Tok::KwAsm: return "'asm'";
    case Tok::KwSignature: return "'signature'";
    case Tok::KwDefinitions: return "'definitions'";
    case Tok::KwInit: return "'init'";
    case Tok::KwDomain: return "'domain'";
    case Tok::KwAgentset: return "'agentset'";
    case Tok::KwStatic: return "'static'";
    case Tok::KwMonitored: return "'monitored'";
    case Tok::KwControlled: return "'controlled'";
    case Tok::KwDerived: return "'derived'";
    case Tok::KwFunction: return "'function'";
    case Tok::KwRule: return "'rule'";
    case Tok::KwMain: return "'main'";
    case Tok::KwInvariant: return "'invariant'";
    case Tok::KwAgent: return "'agent'";
    case Tok::KwIf: return "'if'";
    case Tok::KwThen: return "'then'";
    case Tok::KwElse: return "'else'";
    case Tok::KwEndif: return "'endif'";
    case Tok::KwPar: return "'par'";
    case Tok::KwEndpar: return "'endpar'";
    case Tok::KwForall: return "'forall'";
    case Tok::KwWith: return "'with'";
    case Tok::KwDo: return "'do'";
    case Tok::KwChoose: return "'choose'";
    case Tok::KwIfnone: return "'ifnone'";
    case Tok::KwEndchoose: return "'endchoose'";
    case Tok::KwLet: return "'let'";
    case Tok::KwIn: return "'in'";
    case Tok::KwEndlet: return "'endlet'";
    case Tok::KwSwitch: return "'switch'";
    case Tok::KwCase: return "'case'";
    case Tok::KwOtherwise: return "'otherwise'";
    case Tok::KwEndswitch: return "'endswitch'";
    case Tok::KwSkip: return "'skip'";
    case Tok::KwProgram: return "'program'";
    case Tok::KwPick: return "'pick'";
    case Tok::KwAnd: return "'and'";
    case Tok::KwOr: return "'or'";
    case Tok::KwNot: return "'not'";
    case Tok::KwImplies: return "'implies'";
    case Tok::KwIsDef: return "'isDef'";
    case Tok::KwTrue: return "'true'";
    case Tok::KwFalse: return "'false'";
    case Tok::KwUndef: return "'undef'";
    case Tok::KwSelf: return "'self'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Colon: return "':'";
    case Tok::Assign: return "':='";
    case Tok::Eq: return "'='";
    case Tok::Ne: return "'!='";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::DotDot: return "'..'";
    case Tok::Arrow: return "'->'";
    case Tok::End: return "end of input";
    case Tok::Error: return "invalid token";
  }
  return "?";
}

LexResult lex(const std::string& source) {
  LexResult out;
  size_t i = 0;
  uint32_t line = 1;
  uint32_t col = 1;
  const size_t n = source.size();

  auto advance = [&](size_t count) {
    for (size_t k = 0; k < count && i < n; ++k, ++i) {
      if (source[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto error = [&](const std::string& msg) {
    out.errors.push_back({"E_LEX", msg, line, col});
  };
  auto push = [&](Tok kind, size_t len) {
    Token t;
    t.kind = kind;
    t.text = source.substr(i, len);
    t.begin = static_cast<uint32_t>(i);
    t.end = static_cast<uint32_t>(i + len);
    t.line = line;
    t.column = col;
    out.tokens.push_back(std::move(t));
    advance(len);
  };

  while (i < n) {
    char c = source[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < n && source[i + 1] == '/') {
      while (i < n && source[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < n && source[i + 1] == '*') {
      uint32_t start_line = line, start_col = col;
      advance(2);
      bool closed = false;
      while (i < n) {
        if (source[i] == '*' && i + 1 < n && source[i + 1] == '/') {
          advance(2);
          closed = true;
          break;
        }
        advance(1);
      }
      if (!closed)
        out.errors.push_back({"E_LEX", "unterminated block comment", start_line, start_col});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t len = 1;
      while (i + len < n && std::isdigit(static_cast<unsigned char>(source[i + len]))) ++len;
      push(Tok::Int, len);
      continue;
    }
    if (c == '$') {
      size_t len = 1;
      while (i + len < n && ident_char(source[i + len])) ++len;
      if (len == 1) {
        error("'$' must be followed by a variable name");
        push(Tok::Error, 1);
        continue;
      }
      push(Tok::VarId, len);
      continue;
    }
    if (ident_start(c)) {
      size_t len = 1;
      while (i + len < n && ident_char(source[i + len])) ++len;
      std::string word = source.substr(i, len);
      auto it = keyword_table().find(word);
      if (it != keyword_table().end()) {
        push(it->second, len);
      } else if (std::isupper(static_cast<unsigned char>(c))) {
        push(Tok::UpperId, len);
      } else {
        push(Tok::LowerId, len);
      }
      continue;
    }
    switch (c) {
      case '(': push(Tok::LParen, 1); continue;
      case ')': push(Tok::RParen, 1); continue;
      case '[': push(Tok::LBracket, 1); continue;
      case ']': push(Tok::RBracket, 1); continue;
      case '{': push(Tok::LBrace, 1); continue;
      case '}': push(Tok::RBrace, 1); continue;
      case ',': push(Tok::Comma, 1); continue;
      case '+': push(Tok::Plus, 1); continue;
      case '*': push(Tok::Star, 1); continue;
      case ':':
        if (i + 1 < n && source[i + 1] == '=') push(Tok::Assign, 2);
        else push(Tok::Colon, 1);
        continue;
      case '=': push(Tok::Eq, 1); continue;
      case '!':
        if (i + 1 < n && source[i + 1] == '=') {
          push(Tok::Ne, 2);
        } else {
          error("expected '!=' after '!'");
          push(Tok::Error, 1);
        }
        continue;
      case '<':
        if (i + 1 < n && source[i + 1] == '=') push(Tok::Le, 2);
        else push(Tok::Lt, 1);
        continue;
      case '>':
        if (i + 1 < n && source[i + 1] == '=') push(Tok::Ge, 2);
        else push(Tok::Gt, 1);
        continue;
      case '-':
        if (i + 1 < n && source[i + 1] == '>') push(Tok::Arrow, 2);
        else push(Tok::Minus, 1);
        continue;
      case '.':
        if (i + 1 < n && source[i + 1] == '.') {
          push(Tok::DotDot, 2);
        } else {
          error("expected '..' after '.'");
          push(Tok::Error, 1);
        }
        continue;
      default:
        error(std::string("unexpected character '") + c + "'");
        push(Tok::Error, 1);
        continue;
    }
  }

  Token end;
  end.kind = Tok::End;
  end.begin = end.end = static_cast<uint32_t>(n);
  end.line = line;
  end.column = col;
  out.tokens.push_back(end);
  return out;
}

} // namespace asmf
