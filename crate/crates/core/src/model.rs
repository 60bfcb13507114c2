//! Attribute schema, tri-valued vectors and spot records.
//!
//! Vectors are dense: one [`TriValue`] per schema attribute, stored in schema
//! order. Every binary operation first checks that both operands were built
//! over the same attribute ids and fails with [`Error::SchemaMismatch`]
//! otherwise.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Applicable, not applicable, or no information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriValue {
    Yes,
    No,
    DontCare,
}

impl TriValue {
    pub const ALL: [TriValue; 3] = [TriValue::Yes, TriValue::No, TriValue::DontCare];

    /// Folds a proposed value into the current one.
    ///
    /// Yes always wins, No only overwrites DontCare, DontCare is ignored.
    pub fn merge(self, proposal: TriValue) -> TriValue {
        match (self, proposal) {
            (_, TriValue::Yes) => TriValue::Yes,
            (TriValue::DontCare, TriValue::No) => TriValue::No,
            (current, _) => current,
        }
    }
}

impl fmt::Display for TriValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriValue::Yes => "yes",
            TriValue::No => "no",
            TriValue::DontCare => "dont_care",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeGroup {
    SpotType,
    Facility,
    Customer,
    Season,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub id: String,
    pub group: AttributeGroup,
    /// Question asked when the two candidate spots differ on this attribute.
    pub question_text: String,
    /// Predicate phrase completing "<spot> is ...", e.g. "recommended for children".
    pub reason_template: String,
}

impl Attribute {
    fn new(id: &str, group: AttributeGroup, question: &str, reason: &str) -> Self {
        Attribute {
            id: id.to_owned(),
            group,
            question_text: question.to_owned(),
            reason_template: reason.to_owned(),
        }
    }
}

/// Ordered universe of attributes. Order drives question order and reason order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
}

pub const SPOT_TYPES: [&str; 4] = ["art_museum", "park", "museum", "observatory"];
pub const CUSTOMERS: [&str; 5] = ["children", "ladies", "babies", "alone", "pets"];
pub const SEASONS: [&str; 4] = ["spring", "summer", "autumn", "winter"];
pub const FREE_ADMISSION: &str = "free_admission";
pub const PARKING: &str = "parking";
pub const RAIN_OK: &str = "rain_ok";

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidSchema("schema has no attributes".into()));
        }
        let mut seen = HashSet::new();
        for attr in &attributes {
            if attr.id.trim().is_empty() {
                return Err(Error::InvalidSchema("empty attribute id".into()));
            }
            if attr.id.starts_with('$') {
                return Err(Error::InvalidSchema(format!(
                    "attribute id `{}` may not start with `$`",
                    attr.id
                )));
            }
            if !seen.insert(attr.id.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate attribute id `{}`",
                    attr.id
                )));
            }
        }
        Ok(AttributeSchema { attributes })
    }

    /// The sixteen built-in attributes: 4 spot types, 3 facilities, 5 customer types, 4 seasons.
    pub fn default_schema() -> Self {
        use AttributeGroup::*;
        let attributes = vec![
            Attribute::new("art_museum", SpotType, "Do you like art museums?", "an art museum"),
            Attribute::new("park", SpotType, "Do you like parks?", "a park"),
            Attribute::new("museum", SpotType, "Do you like museums?", "a museum"),
            Attribute::new("observatory", SpotType, "Do you like observatories?", "an observatory"),
            Attribute::new(
                FREE_ADMISSION,
                Facility,
                "Would you prefer a place with free admission?",
                "free to enter",
            ),
            Attribute::new(PARKING, Facility, "Will you be going by car?", "equipped with parking"),
            Attribute::new(
                RAIN_OK,
                Facility,
                "Would you like a place you can enjoy even in the rain?",
                "enjoyable even in the rain",
            ),
            Attribute::new(
                "children",
                Customer,
                "Will you go with your children?",
                "recommended for children",
            ),
            Attribute::new(
                "ladies",
                Customer,
                "Will you go with female friends?",
                "recommended for ladies",
            ),
            Attribute::new(
                "babies",
                Customer,
                "Will you be taking a baby with you?",
                "recommended for families with babies",
            ),
            Attribute::new(
                "alone",
                Customer,
                "Will you travel alone?",
                "recommended for travelling alone",
            ),
            Attribute::new("pets", Customer, "Will you bring a pet?", "recommended for visitors with pets"),
            Attribute::new("spring", Season, "Are you going in spring?", "recommended in spring"),
            Attribute::new("summer", Season, "Are you going in summer?", "recommended in summer"),
            Attribute::new("autumn", Season, "Are you going in autumn?", "recommended in autumn"),
            Attribute::new("winter", Season, "Are you going in winter?", "recommended in winter"),
        ];
        AttributeSchema { attributes }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let attributes: Vec<Attribute> = serde_json::from_str(text)?;
        Self::new(attributes)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.id.as_str())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.id == id)
    }

    fn same_ids(&self, other: &AttributeSchema) -> bool {
        self.attributes.len() == other.attributes.len()
            && self.ids().zip(other.ids()).all(|(a, b)| a == b)
    }
}

impl<'de> Deserialize<'de> for AttributeSchema {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let attributes = Vec::<Attribute>::deserialize(de)?;
        AttributeSchema::new(attributes).map_err(serde::de::Error::custom)
    }
}

/// One tri-value per schema attribute.
#[derive(Clone)]
pub struct AttributeVector {
    schema: Arc<AttributeSchema>,
    values: Vec<TriValue>,
}

impl AttributeVector {
    pub fn filled(schema: &Arc<AttributeSchema>, value: TriValue) -> Self {
        AttributeVector {
            schema: Arc::clone(schema),
            values: vec![value; schema.len()],
        }
    }

    /// Builds a vector from explicit values; attributes not named are DontCare.
    pub fn from_pairs<'a>(
        schema: &Arc<AttributeSchema>,
        pairs: impl IntoIterator<Item = (&'a str, TriValue)>,
    ) -> Result<Self> {
        let mut v = Self::filled(schema, TriValue::DontCare);
        for (id, value) in pairs {
            v.set(id, value)?;
        }
        Ok(v)
    }

    pub fn from_values(schema: &Arc<AttributeSchema>, values: Vec<TriValue>) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} values, got {}",
                schema.len(),
                values.len()
            )));
        }
        Ok(AttributeVector {
            schema: Arc::clone(schema),
            values,
        })
    }

    /// Parses the map form produced by [`AttributeVector::to_map`]. The map must be
    /// complete over the schema and carry no extra keys.
    pub fn from_map(schema: &Arc<AttributeSchema>, map: &IndexMap<String, TriValue>) -> Result<Self> {
        if let Some(extra) = map.keys().find(|k| schema.index_of(k).is_none()) {
            return Err(Error::SchemaMismatch(format!("unknown attribute `{extra}`")));
        }
        let values = schema
            .ids()
            .map(|id| {
                map.get(id)
                    .copied()
                    .ok_or_else(|| Error::SchemaMismatch(format!("missing attribute `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AttributeVector {
            schema: Arc::clone(schema),
            values,
        })
    }

    pub fn to_map(&self) -> IndexMap<String, TriValue> {
        self.iter().map(|(id, v)| (id.to_owned(), v)).collect()
    }

    pub fn schema(&self) -> &Arc<AttributeSchema> {
        &self.schema
    }

    pub fn get(&self, id: &str) -> Option<TriValue> {
        self.schema.index_of(id).map(|i| self.values[i])
    }

    pub fn set(&mut self, id: &str, value: TriValue) -> Result<()> {
        let i = self
            .schema
            .index_of(id)
            .ok_or_else(|| Error::SchemaMismatch(format!("unknown attribute `{id}`")))?;
        self.values[i] = value;
        Ok(())
    }

    pub fn values(&self) -> &[TriValue] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, TriValue)> {
        self.schema.ids().zip(self.values.iter().copied())
    }

    /// Ids whose value is `value`, in schema order.
    pub fn ids_with(&self, value: TriValue) -> Vec<String> {
        self.iter()
            .filter(|&(_, v)| v == value)
            .map(|(id, _)| id.to_owned())
            .collect()
    }

    pub(crate) fn check_compatible(&self, other: &AttributeVector) -> Result<()> {
        if Arc::ptr_eq(&self.schema, &other.schema) || self.schema.same_ids(&other.schema) {
            Ok(())
        } else {
            Err(Error::SchemaMismatch(
                "vectors are defined over different attribute schemas".into(),
            ))
        }
    }
}

impl PartialEq for AttributeVector {
    fn eq(&self, other: &Self) -> bool {
        self.schema.same_ids(&other.schema) && self.values == other.values
    }
}

impl Eq for AttributeVector {}

impl fmt::Debug for AttributeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

/// A full-vector proposal attached to a keyword entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateRule {
    proposal: AttributeVector,
}

impl UpdateRule {
    pub fn new(proposal: AttributeVector) -> Self {
        UpdateRule { proposal }
    }

    /// A rule that proposes nothing (all DontCare).
    pub fn noop(schema: &Arc<AttributeSchema>) -> Self {
        UpdateRule {
            proposal: AttributeVector::filled(schema, TriValue::DontCare),
        }
    }

    pub fn from_pairs<'a>(
        schema: &Arc<AttributeSchema>,
        pairs: impl IntoIterator<Item = (&'a str, TriValue)>,
    ) -> Result<Self> {
        AttributeVector::from_pairs(schema, pairs).map(Self::new)
    }

    pub fn proposal(&self) -> &AttributeVector {
        &self.proposal
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaEntry {
    pub keywords: Vec<String>,
    pub answer: String,
}

/// One sightseeing spot as it appears in the catalog file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpotRecord {
    pub id: String,
    pub name: String,
    pub introduction: String,
    #[serde(default)]
    pub qa_entries: Vec<QaEntry>,
    pub spot_type: String,
    pub paid_admission: bool,
    pub parking: bool,
    pub rain_ok: bool,
    #[serde(default)]
    pub recommended_customers: BTreeSet<String>,
    #[serde(default)]
    pub recommended_seasons: BTreeSet<String>,
}

impl SpotRecord {
    /// Checks the closed vocabularies for spot type, customers and seasons.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidSpot {
            spot: self.id.clone(),
            reason,
        };
        if self.id.trim().is_empty() {
            return Err(bad("empty id".into()));
        }
        if !SPOT_TYPES.contains(&self.spot_type.as_str()) {
            return Err(bad(format!("unknown spot_type `{}`", self.spot_type)));
        }
        if let Some(c) = self
            .recommended_customers
            .iter()
            .find(|c| !CUSTOMERS.contains(&c.as_str()))
        {
            return Err(bad(format!("unknown customer type `{c}`")));
        }
        if let Some(s) = self
            .recommended_seasons
            .iter()
            .find(|s| !SEASONS.contains(&s.as_str()))
        {
            return Err(bad(format!("unknown season `{s}`")));
        }
        Ok(())
    }
}

/// The catalog file: `{"schema_version": 1, "spots": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub schema_version: u32,
    pub spots: Vec<SpotRecord>,
}

impl Catalog {
    pub const SCHEMA_VERSION: u32 = 1;

    pub fn from_json(text: &str) -> Result<Self> {
        let catalog: Catalog = serde_json::from_str(text)?;
        if catalog.schema_version != Self::SCHEMA_VERSION {
            return Err(Error::InvalidCatalog(format!(
                "unsupported schema_version {}",
                catalog.schema_version
            )));
        }
        let mut seen = HashSet::new();
        for spot in &catalog.spots {
            spot.validate()?;
            if !seen.insert(spot.id.as_str()) {
                return Err(Error::InvalidCatalog(format!("duplicate spot id `{}`", spot.id)));
            }
        }
        Ok(catalog)
    }

    pub fn get(&self, id: &str) -> Option<&SpotRecord> {
        self.spots.iter().find(|s| s.id == id)
    }
}

/// Builds a spot's attribute vector from its catalog record.
///
/// Spot type is one-hot, facilities are Yes/No from the record booleans
/// (`free_admission` is the negation of `paid_admission`), and customer and
/// season attributes are Yes when listed and DontCare otherwise.
pub fn extract_attribute_vector(
    record: &SpotRecord,
    schema: &Arc<AttributeSchema>,
) -> Result<AttributeVector> {
    let mut v = AttributeVector::filled(schema, TriValue::DontCare);
    let require = |token: &str, vocabulary: &[&str], what: &str| -> Result<usize> {
        if !vocabulary.contains(&token) {
            return Err(Error::SchemaMismatch(format!(
                "spot `{}`: unknown {what} `{token}`",
                record.id
            )));
        }
        schema.index_of(token).ok_or_else(|| {
            Error::SchemaMismatch(format!(
                "spot `{}`: {what} `{token}` is not in the schema",
                record.id
            ))
        })
    };

    let type_index = require(&record.spot_type, &SPOT_TYPES, "spot type")?;
    for (i, attr) in schema.attributes().iter().enumerate() {
        if attr.group == AttributeGroup::SpotType {
            v.values[i] = if i == type_index { TriValue::Yes } else { TriValue::No };
        }
    }

    let yes_no = |b: bool| if b { TriValue::Yes } else { TriValue::No };
    for (id, flag) in [
        (FREE_ADMISSION, !record.paid_admission),
        (PARKING, record.parking),
        (RAIN_OK, record.rain_ok),
    ] {
        if let Some(i) = schema.index_of(id) {
            v.values[i] = yes_no(flag);
        }
    }

    for customer in &record.recommended_customers {
        let i = require(customer, &CUSTOMERS, "customer type")?;
        v.values[i] = TriValue::Yes;
    }
    for season in &record.recommended_seasons {
        let i = require(season, &SEASONS, "season")?;
        v.values[i] = TriValue::Yes;
    }
    Ok(v)
}

pub fn init_user_vector(schema: &Arc<AttributeSchema>) -> AttributeVector {
    AttributeVector::filled(schema, TriValue::DontCare)
}

/// Applies `rule` to `user` attribute by attribute and returns the new vector.
pub fn merge_update(user: &AttributeVector, rule: &UpdateRule) -> Result<AttributeVector> {
    user.check_compatible(&rule.proposal)?;
    let values = user
        .values
        .iter()
        .zip(&rule.proposal.values)
        .map(|(&current, &proposal)| current.merge(proposal))
        .collect();
    Ok(AttributeVector {
        schema: Arc::clone(&user.schema),
        values,
    })
}

/// Attribute ids whose values differ between `a` and `b`, in schema order.
pub fn differing_attributes(a: &AttributeVector, b: &AttributeVector) -> Result<Vec<String>> {
    a.check_compatible(b)?;
    Ok(a.iter()
        .zip(b.values.iter())
        .filter(|((_, x), y)| x != *y)
        .map(|((id, _), _)| id.to_owned())
        .collect())
}
