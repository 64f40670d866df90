//! Line-oriented reader for task fixture files.
//!
//! Blank lines and lines starting with `#` are skipped. Keyed lines look like
//! `key v1 v2 ...`; matrix and table rows are plain whitespace-separated values.

use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TaskFormatError {
    pub line: usize,
    pub message: String,
}

pub(crate) struct TextReader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> TextReader<'a> {
    pub fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self { lines, pos: 0 }
    }

    pub fn error(&self, message: impl Into<String>) -> TaskFormatError {
        let line = self
            .lines
            .get(self.pos.saturating_sub(1))
            .map(|(n, _)| *n)
            .unwrap_or(0);
        TaskFormatError {
            line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str, TaskFormatError> {
        let (_, line) = *self.lines.get(self.pos).ok_or_else(|| TaskFormatError {
            line: self.lines.last().map(|(n, _)| *n).unwrap_or(0),
            message: "unexpected end of file".into(),
        })?;
        self.pos += 1;
        Ok(line)
    }

    pub fn is_done(&self) -> bool {
        self.pos >= self.lines.len()
    }

    pub fn peek_key(&self) -> Option<&'a str> {
        self.lines
            .get(self.pos)
            .and_then(|(_, l)| l.split_whitespace().next())
    }

    /// Reads a line that must start with `key`; returns the remaining tokens.
    pub fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>, TaskFormatError> {
        let line = self.next_line()?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some(k) if k == key => Ok(tokens.collect()),
            other => Err(self.error(format!("expected `{key}`, found {other:?}"))),
        }
    }

    pub fn values<T: FromStr>(&mut self, key: &str) -> Result<Vec<T>, TaskFormatError> {
        let tokens = self.keyed(key)?;
        self.parse_all(&tokens)
    }

    pub fn value<T: FromStr>(&mut self, key: &str) -> Result<T, TaskFormatError> {
        let v = self.values::<T>(key)?;
        match v.as_slice() {
            [_] => Ok(v.into_iter().next().expect("one value")),
            _ => Err(self.error(format!("`{key}` takes exactly one value"))),
        }
    }

    /// A plain row of values.
    pub fn row<T: FromStr>(&mut self) -> Result<Vec<T>, TaskFormatError> {
        let line = self.next_line()?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        self.parse_all(&tokens)
    }

    fn parse_all<T: FromStr>(&self, tokens: &[&str]) -> Result<Vec<T>, TaskFormatError> {
        tokens
            .iter()
            .map(|t| {
                t.parse::<T>()
                    .map_err(|_| self.error(format!("cannot parse value {t:?}")))
            })
            .collect()
    }

    pub fn finish(self) -> Result<(), TaskFormatError> {
        if self.is_done() {
            Ok(())
        } else {
            Err(TaskFormatError {
                line: self.lines[self.pos].0,
                message: "unexpected trailing content".into(),
            })
        }
    }
}

pub(crate) fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}
