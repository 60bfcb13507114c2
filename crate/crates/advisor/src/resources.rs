use std::path::{Path, PathBuf};
use std::sync::Arc;

use advisor_core::{AttributeSchema, Catalog, Lexicon};
use anyhow::{Context, Result};

/// Overrides the directory transcripts are written to.
pub const LOG_DIR_ENV: &str = "ADVISOR_LOG_DIR";
pub const DEFAULT_LOG_DIR: &str = "transcripts";

/// Read-only data shared by every session.
#[derive(Debug, Clone)]
pub struct Resources {
    pub schema: Arc<AttributeSchema>,
    pub catalog: Catalog,
    pub lexicon: Lexicon,
}

impl Resources {
    pub fn load(catalog: &Path, lexicon: &Path, schema: Option<&Path>) -> Result<Self> {
        let schema = match schema {
            Some(p) => AttributeSchema::from_json(&read(p)?)
                .with_context(|| format!("parsing schema {}", p.display()))?,
            None => AttributeSchema::default_schema(),
        };
        let schema = Arc::new(schema);
        let catalog = Catalog::from_json(&read(catalog)?)
            .with_context(|| format!("parsing catalog {}", catalog.display()))?;
        let lexicon = Lexicon::from_json(&read(lexicon)?, &schema)
            .with_context(|| format!("parsing lexicon {}", lexicon.display()))?;
        lexicon.check_plan(&schema)?;
        for spot in &catalog.spots {
            advisor_core::extract_attribute_vector(spot, &schema)
                .with_context(|| format!("catalog spot `{}`", spot.id))?;
        }
        Ok(Resources { schema, catalog, lexicon })
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn log_dir() -> PathBuf {
    std::env::var_os(LOG_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_LOG_DIR))
}
