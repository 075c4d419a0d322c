//! Canonical method identity shared by spectra, stack traces, call graphs
//! and ground truth.
//!
//! The canonical text form follows the GZoltar line-identifier grammar minus
//! the line suffix: `<package>$<Class>#<method>[(<params>)]`. Nested classes
//! keep their `$` separators inside the class part (`org.x$Outer$Inner#m`).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MethodId {
    package: String,
    class: String,
    method: String,
    signature: Option<String>,
}

impl MethodId {
    pub fn new(
        package: impl Into<String>,
        class: impl Into<String>,
        method: impl Into<String>,
        signature: Option<String>,
    ) -> Result<Self, Error> {
        let id = MethodId {
            package: package.into(),
            class: class.into(),
            method: method.into(),
            signature,
        };
        id.validate()?;
        Ok(id)
    }

    /// Builds an identity from a stack-frame class name (`a.b.Outer$Inner`)
    /// and method name. Frames never carry parameter types.
    pub fn from_frame(class_fqn: &str, method: &str) -> Result<Self, Error> {
        let (package, class) = match class_fqn.rfind('.') {
            Some(i) => (&class_fqn[..i], &class_fqn[i + 1..]),
            None => ("", class_fqn),
        };
        MethodId::new(package, class, method, None)
    }

    fn validate(&self) -> Result<(), Error> {
        let fail = |reason| {
            Err(Error::MethodId {
                text: self.to_string(),
                reason,
            })
        };
        if self.class.is_empty() {
            return fail("empty class name");
        }
        if self.method.is_empty() {
            return fail("empty method name");
        }
        if self.package.contains(['$', '#']) {
            return fail("package contains `$` or `#`");
        }
        if self.class.contains('#') {
            return fail("class contains `#`");
        }
        if self.method.contains(['#', '(', ')']) {
            return fail("method name contains `#` or parentheses");
        }
        let all = [&self.package, &self.class, &self.method];
        if all.iter().any(|s| s.chars().any(char::is_whitespace)) {
            return fail("embedded whitespace");
        }
        if let Some(sig) = &self.signature {
            if sig.contains(['(', ')', '#']) {
                return fail("signature contains parentheses or `#`");
            }
        }
        Ok(())
    }

    pub fn package(&self) -> &str {
        &self.package
    }

    pub fn class(&self) -> &str {
        &self.class
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn signature(&self) -> Option<&str> {
        self.signature.as_deref()
    }

    /// Fully-qualified class name in dotted form.
    pub fn class_fqn(&self) -> String {
        if self.package.is_empty() {
            self.class.clone()
        } else {
            format!("{}.{}", self.package, self.class)
        }
    }

    /// The identity with the parameter signature dropped.
    pub fn coarse(&self) -> MethodId {
        MethodId {
            signature: None,
            ..self.clone()
        }
    }

    pub fn same_coarse(&self, other: &MethodId) -> bool {
        self.package == other.package && self.class == other.class && self.method == other.method
    }

    /// Identity match across granularities: signatures must agree when both
    /// sides carry one, otherwise the coarse key decides.
    pub fn matches(&self, other: &MethodId) -> bool {
        self.same_coarse(other)
            && match (&self.signature, &other.signature) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
    }

    fn key_bytes(&self) -> impl Iterator<Item = u8> + '_ {
        let sig = self.signature.as_deref();
        self.package
            .bytes()
            .chain(std::iter::once(b'$'))
            .chain(self.class.bytes())
            .chain(std::iter::once(b'#'))
            .chain(self.method.bytes())
            .chain(sig.map(|_| b'('))
            .chain(sig.into_iter().flat_map(str::bytes))
            .chain(sig.map(|_| b')'))
    }
}

/// Canonical order: byte-wise comparison of the canonical text form.
impl Ord for MethodId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_bytes().cmp(other.key_bytes())
    }
}

impl PartialOrd for MethodId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}${}#{}", self.package, self.class, self.method)?;
        if let Some(sig) = &self.signature {
            write!(f, "({sig})")?;
        }
        Ok(())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self, Error> {
        let fail = |reason| Error::MethodId {
            text: text.to_string(),
            reason,
        };
        let (owner, rest) = text.split_once('#').ok_or_else(|| fail("missing `#`"))?;
        let (package, class) = owner.split_once('$').ok_or_else(|| fail("missing `$`"))?;
        let (method, signature) = match rest.find('(') {
            Some(open) => {
                let sig = rest[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| fail("unterminated parameter list"))?;
                (&rest[..open], Some(sig.to_string()))
            }
            None => (rest, None),
        };
        MethodId::new(package, class, method, signature)
    }
}

impl Serialize for MethodId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MethodId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
