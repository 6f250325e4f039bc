"""Tokenizer for the supported C subset.

Input must already be preprocessed: the only `#` lines allowed are
`#pragma` lines, which become single PRAGMA tokens (with `&`
continuation lines merged).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CParseError

# longest first so the scanner can match greedily
MULTI_PUNCT = (
    "++", "--", "+=", "-=", "*=", "/=", "%=",
    "==", "!=", "<=", ">=", "&&", "||", "...",
)
SINGLE_PUNCT = "+-*/%<>=!&|(){}[],;.:?"


@dataclass(frozen=True)
class Token:
    kind: str  # ID | NUM | STR | PUNCT | PRAGMA | EOF
    value: str
    line: int
    col: int

    def __repr__(self):
        return "Token(%s, %r, %d:%d)" % (self.kind, self.value, self.line, self.col)


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident(c: str) -> bool:
    return c.isalnum() or c == "_"


class Lexer:
    def __init__(self, text: str, filename: str = "<input>"):
        self.text = text
        self.filename = filename
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, msg: str):
        raise CParseError(msg, self.line, self.col, self.filename)

    def _advance(self, n: int = 1):
        for _ in range(n):
            if self.pos < len(self.text):
                if self.text[self.pos] == "\n":
                    self.line += 1
                    self.col = 1
                else:
                    self.col += 1
                self.pos += 1

    def _peek(self, n: int = 1) -> str:
        return self.text[self.pos:self.pos + n]

    def _at_line_start(self) -> bool:
        i = self.pos - 1
        while i >= 0 and self.text[i] in " \t":
            i -= 1
        return i < 0 or self.text[i] == "\n"

    def _read_line(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] != "\n":
            self._advance()
        return self.text[start:self.pos]

    def _skip_ws_and_comments(self):
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in " \t\r\n":
                self._advance()
            elif self._peek(2) == "//":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance()
            elif self._peek(2) == "/*":
                self._advance(2)
                while self.pos < len(self.text) and self._peek(2) != "*/":
                    self._advance()
                if self.pos >= len(self.text):
                    self.error("unterminated comment")
                self._advance(2)
            else:
                return

    def _lex_pragma(self) -> Token:
        line, col = self.line, self.col
        text = self._read_line().rstrip()
        if not text.startswith("#pragma"):
            raise CParseError(
                "preprocessor directive left in input (run the preprocessor first): %s"
                % text.split()[0], line, col, self.filename)
        # merge `&` continuation lines: `... , &` + `#pragma hmpp & ...`
        while text.rstrip().endswith("&"):
            self._skip_ws_and_comments()
            if not (self._peek(1) == "#" and self._at_line_start()):
                self.error("pragma continuation line missing after trailing '&'")
            cont = self._read_line().strip()
            head = cont.split()
            if len(head) < 3 or head[0] != "#pragma" or head[2] != "&":
                raise CParseError("malformed pragma continuation: %s" % cont,
                                  self.line, self.col, self.filename)
            text = text.rstrip()[:-1].rstrip() + " " + " ".join(head[3:])
        return Token("PRAGMA", text, line, col)

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        while True:
            self._skip_ws_and_comments()
            if self.pos >= len(self.text):
                out.append(Token("EOF", "", self.line, self.col))
                return out
            c = self.text[self.pos]
            line, col = self.line, self.col
            if c == "#":
                if not self._at_line_start():
                    self.error("'#' only allowed to start a pragma line")
                out.append(self._lex_pragma())
            elif _is_ident_start(c):
                start = self.pos
                while self.pos < len(self.text) and _is_ident(self.text[self.pos]):
                    self._advance()
                out.append(Token("ID", self.text[start:self.pos], line, col))
            elif c.isdigit() or (c == "." and self._peek(2)[1:2].isdigit()):
                out.append(self._lex_number(line, col))
            elif c == '"':
                out.append(self._lex_string(line, col))
            else:
                two = self._peek(3) if self._peek(3) in MULTI_PUNCT else self._peek(2)
                if two in MULTI_PUNCT:
                    self._advance(len(two))
                    out.append(Token("PUNCT", two, line, col))
                elif c in SINGLE_PUNCT:
                    self._advance()
                    out.append(Token("PUNCT", c, line, col))
                else:
                    self.error("unexpected character %r" % c)

    def _lex_number(self, line: int, col: int) -> Token:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self._advance()
        if self._peek(1) == ".":
            self._advance()
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self._advance()
        if self._peek(1) in ("e", "E"):
            save = self.pos
            self._advance()
            if self._peek(1) in ("+", "-"):
                self._advance()
            if self._peek(1).isdigit():
                while self.pos < len(self.text) and self.text[self.pos].isdigit():
                    self._advance()
            else:
                self.pos = save  # bare identifier follows, not an exponent
        lexeme = self.text[start:self.pos]
        if self._peek(1) and _is_ident_start(self._peek(1)):
            self.error("unsupported numeric literal suffix after %r" % lexeme)
        return Token("NUM", lexeme, line, col)

    def _lex_string(self, line: int, col: int) -> Token:
        start = self.pos
        self._advance()  # opening quote
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c == "\\":
                self._advance(2)
            elif c == '"':
                self._advance()
                return Token("STR", self.text[start:self.pos], line, col)
            elif c == "\n":
                break
            else:
                self._advance()
        raise CParseError("unterminated string literal", line, col, self.filename)


def tokenize(text: str, filename: str = "<input>") -> list[Token]:
    return Lexer(text, filename).tokens()


def token_stream(text: str, filename: str = "<input>") -> list[tuple[str, str]]:
    """(kind, value) pairs with positions erased; pragma text whitespace folded.

    Two sources are token-equivalent iff their streams compare equal.
    """
    out = []
    for t in tokenize(text, filename):
        if t.kind == "EOF":
            break
        value = " ".join(t.value.split()) if t.kind == "PRAGMA" else t.value
        out.append((t.kind, value))
    return out
