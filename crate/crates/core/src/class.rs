use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number of object classes predicted per ConfMap.
pub const NUM_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassId {
    Pedestrian,
    Cyclist,
    Car,
}

impl ClassId {
    pub const ALL: [ClassId; NUM_CLASSES] = [ClassId::Pedestrian, ClassId::Cyclist, ClassId::Car];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ClassId> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassId::Pedestrian => "pedestrian",
            ClassId::Cyclist => "cyclist",
            ClassId::Car => "car",
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pedestrian" => Ok(ClassId::Pedestrian),
            "cyclist" => Ok(ClassId::Cyclist),
            "car" => Ok(ClassId::Car),
            other => Err(Error::config(format!("unknown class {other:?}"))),
        }
    }
}

/// One value per object class, indexable by [`ClassId`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerClass<V>(pub [V; NUM_CLASSES]);

impl<V> PerClass<V> {
    pub fn from_fn(mut f: impl FnMut(ClassId) -> V) -> Self {
        PerClass(ClassId::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &V)> {
        ClassId::ALL.into_iter().zip(self.0.iter())
    }

    pub fn map<W>(&self, mut f: impl FnMut(ClassId, &V) -> W) -> PerClass<W> {
        PerClass::from_fn(|c| f(c, &self.0[c.index()]))
    }
}

impl<V> Index<ClassId> for PerClass<V> {
    type Output = V;

    fn index(&self, c: ClassId) -> &V {
        &self.0[c.index()]
    }
}

impl<V> IndexMut<ClassId> for PerClass<V> {
    fn index_mut(&mut self, c: ClassId) -> &mut V {
        &mut self.0[c.index()]
    }
}

impl<V: Serialize> Serialize for PerClass<V> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(NUM_CLASSES))?;
        for (c, v) in self.iter() {
            map.serialize_entry(c.name(), v)?;
        }
        map.end()
    }
}
